//! Line-oriented `key = value` configuration format with bracketed sections.
//!
//! Sections: `[physical]`, `[phenomenological]`, `[grid]`, `[sweep]`,
//! `[bell]`, `[output]`; every section is optional at parse time and each
//! subcommand checks for the sections it needs. Complex values are written
//! as `re,im` pairs, sweep axes as `name:start:stop:count`, angles in
//! radians. Blank lines and lines starting with `#` are ignored. Unknown
//! keys and sections are rejected, close misspellings get a suggestion.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use circulator_core::model::PhysicalParams;
use circulator_core::scattering::{EffectiveRates, PhenomenologicalCouplings};
use num_complex::Complex64;

use crate::error::{CliError, Result};
use crate::table::fmt_float;

/// Frequency grid `linspace(omega_min, omega_max, points)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

/// One sweep axis: a parameter name and a linearly spaced range.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis1: AxisSpec,
    pub axis2: Option<AxisSpec>,
    pub metric: String,
}

/// Grids of the Bell scan plus the operator-oracle truncation dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BellSpec {
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
    pub alpha2_min: f64,
    pub alpha2_max: f64,
    pub alpha2_points: usize,
    pub n_trunc: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub path: String,
    pub format: OutputFormat,
}

/// Parsed configuration; sections a subcommand does not use are ignored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub physical: Option<PhysicalParams>,
    pub phenomenological: Option<(PhenomenologicalCouplings, EffectiveRates)>,
    pub grid: Option<GridSpec>,
    pub sweep: Option<SweepSpec>,
    pub bell: Option<BellSpec>,
    pub output: Option<OutputSpec>,
}

const SECTIONS: [&str; 6] =
    ["physical", "phenomenological", "grid", "sweep", "bell", "output"];

const PHYSICAL_KEYS: [&str; 16] = [
    "omega_c1", "omega_c2", "omega_m1", "omega_m2", "g1", "g2", "v", "kappa1", "kappa2",
    "gamma1", "gamma2", "eps1", "eps2", "omega_d1", "omega_d2", "phi",
];

const PHENOMENOLOGICAL_KEYS: [&str; 12] = [
    "g10", "g20", "v0", "theta1", "theta2", "theta3", "delta_eff", "omega_eff1", "omega_eff2",
    "kappa_eff", "gamma_eff1", "gamma_eff2",
];

const GRID_KEYS: [&str; 3] = ["omega_min", "omega_max", "points"];
const SWEEP_KEYS: [&str; 3] = ["axis1", "axis2", "metric"];
const BELL_KEYS: [&str; 7] = [
    "theta_min", "theta_max", "theta_points", "alpha2_min", "alpha2_max", "alpha2_points",
    "n_trunc",
];
const OUTPUT_KEYS: [&str; 2] = ["path", "format"];

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn suggest(name: &str, valid: &[&str]) -> String {
    valid
        .iter()
        .map(|v| (levenshtein(name, v), *v))
        .filter(|(d, _)| *d <= 3)
        .min_by_key(|(d, _)| *d)
        .map(|(_, v)| format!("; did you mean `{v}`?"))
        .unwrap_or_default()
}

/// Raw key → (line number, value) maps per section.
type RawSections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn split_sections(text: &str) -> Result<RawSections> {
    let mut sections: RawSections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| {
                CliError::Config(format!("line {lineno}: unterminated section header `{line}`"))
            })?;
            if !SECTIONS.contains(&name) {
                return Err(CliError::Config(format!(
                    "line {lineno}: unknown section `[{name}]`{}",
                    suggest(name, &SECTIONS)
                )));
            }
            if sections.contains_key(name) {
                return Err(CliError::Config(format!(
                    "line {lineno}: duplicate section `[{name}]`"
                )));
            }
            sections.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {lineno}: expected `key = value`, got `{line}`"))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let section = current.as_ref().ok_or_else(|| {
            CliError::Config(format!("line {lineno}: key `{key}` appears before any section"))
        })?;
        let entries = sections.get_mut(section).expect("section inserted on header");
        if entries.contains_key(&key) {
            return Err(CliError::Config(format!(
                "line {lineno}: duplicate key `{key}` in section `[{section}]`"
            )));
        }
        entries.insert(key, (lineno, value));
    }
    Ok(sections)
}

struct SectionReader<'a> {
    name: &'a str,
    entries: &'a BTreeMap<String, (usize, String)>,
    valid: &'a [&'a str],
}

impl<'a> SectionReader<'a> {
    fn check_keys(&self) -> Result<()> {
        for (key, (lineno, _)) in self.entries {
            if !self.valid.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "line {lineno}: unknown key `{key}` in section `[{}]`{}",
                    self.name,
                    suggest(key, self.valid)
                )));
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Result<(usize, &'a str)> {
        self.entries
            .get(key)
            .map(|(lineno, value)| (*lineno, value.as_str()))
            .ok_or_else(|| {
                CliError::Config(format!(
                    "section `[{}]` is missing required key `{key}`",
                    self.name
                ))
            })
    }

    fn float(&self, key: &str) -> Result<f64> {
        let (lineno, value) = self.raw(key)?;
        value.parse::<f64>().map_err(|_| {
            CliError::Config(format!("line {lineno}: `{key}` is not a number: `{value}`"))
        })
    }

    fn integer(&self, key: &str) -> Result<usize> {
        let (lineno, value) = self.raw(key)?;
        value.parse::<usize>().map_err(|_| {
            CliError::Config(format!(
                "line {lineno}: `{key}` is not a nonnegative integer: `{value}`"
            ))
        })
    }

    fn complex(&self, key: &str) -> Result<Complex64> {
        let (lineno, value) = self.raw(key)?;
        let parts: Vec<&str> = value.split(',').collect();
        let parsed = if parts.len() == 2 {
            parts[0].trim().parse::<f64>().ok().zip(parts[1].trim().parse::<f64>().ok())
        } else {
            None
        };
        parsed.map(|(re, im)| Complex64::new(re, im)).ok_or_else(|| {
            CliError::Config(format!(
                "line {lineno}: `{key}` is not a complex `re,im` pair: `{value}`"
            ))
        })
    }

    fn axis(&self, key: &str) -> Result<AxisSpec> {
        let (lineno, value) = self.raw(key)?;
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 4 {
            return Err(CliError::Config(format!(
                "line {lineno}: `{key}` must be `name:start:stop:count`, got `{value}`"
            )));
        }
        let bad = |what: &str| {
            CliError::Config(format!("line {lineno}: `{key}` has a bad {what} in `{value}`"))
        };
        Ok(AxisSpec {
            name: parts[0].trim().to_string(),
            start: parts[1].trim().parse().map_err(|_| bad("start"))?,
            stop: parts[2].trim().parse().map_err(|_| bad("stop"))?,
            count: parts[3].trim().parse().map_err(|_| bad("count"))?,
        })
    }
}

/// Parses the configuration text. Every present section is fully checked;
/// section-level requirements of individual subcommands are enforced later.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let sections = split_sections(text)?;
    let mut cfg = RunConfig::default();

    if let Some(entries) = sections.get("physical") {
        let r = SectionReader { name: "physical", entries, valid: &PHYSICAL_KEYS };
        r.check_keys()?;
        cfg.physical = Some(PhysicalParams {
            omega_c1: r.float("omega_c1")?,
            omega_c2: r.float("omega_c2")?,
            omega_m1: r.float("omega_m1")?,
            omega_m2: r.float("omega_m2")?,
            g1: r.float("g1")?,
            g2: r.float("g2")?,
            v: r.float("v")?,
            kappa1: r.float("kappa1")?,
            kappa2: r.float("kappa2")?,
            gamma1: r.float("gamma1")?,
            gamma2: r.float("gamma2")?,
            eps1: r.complex("eps1")?,
            eps2: r.complex("eps2")?,
            omega_d1: r.float("omega_d1")?,
            omega_d2: r.float("omega_d2")?,
            phi: r.float("phi")?,
        });
    }

    if let Some(entries) = sections.get("phenomenological") {
        let r =
            SectionReader { name: "phenomenological", entries, valid: &PHENOMENOLOGICAL_KEYS };
        r.check_keys()?;
        let couplings = PhenomenologicalCouplings {
            g10: r.float("g10")?,
            g20: r.float("g20")?,
            v0: r.float("v0")?,
            theta1: r.float("theta1")?,
            theta2: r.float("theta2")?,
            theta3: r.float("theta3")?,
        };
        let rates = EffectiveRates {
            delta_eff: r.float("delta_eff")?,
            omega_eff1: r.float("omega_eff1")?,
            omega_eff2: r.float("omega_eff2")?,
            kappa_eff: r.float("kappa_eff")?,
            gamma_eff1: r.float("gamma_eff1")?,
            gamma_eff2: r.float("gamma_eff2")?,
        };
        cfg.phenomenological = Some((couplings, rates));
    }

    if let Some(entries) = sections.get("grid") {
        let r = SectionReader { name: "grid", entries, valid: &GRID_KEYS };
        r.check_keys()?;
        cfg.grid = Some(GridSpec {
            omega_min: r.float("omega_min")?,
            omega_max: r.float("omega_max")?,
            points: r.integer("points")?,
        });
    }

    if let Some(entries) = sections.get("sweep") {
        let r = SectionReader { name: "sweep", entries, valid: &SWEEP_KEYS };
        r.check_keys()?;
        let axis2 = if entries.contains_key("axis2") { Some(r.axis("axis2")?) } else { None };
        cfg.sweep = Some(SweepSpec {
            axis1: r.axis("axis1")?,
            axis2,
            metric: r.raw("metric")?.1.to_string(),
        });
    }

    if let Some(entries) = sections.get("bell") {
        let r = SectionReader { name: "bell", entries, valid: &BELL_KEYS };
        r.check_keys()?;
        let n_trunc =
            if entries.contains_key("n_trunc") { r.integer("n_trunc")? } else { 20 };
        cfg.bell = Some(BellSpec {
            theta_min: r.float("theta_min")?,
            theta_max: r.float("theta_max")?,
            theta_points: r.integer("theta_points")?,
            alpha2_min: r.float("alpha2_min")?,
            alpha2_max: r.float("alpha2_max")?,
            alpha2_points: r.integer("alpha2_points")?,
            n_trunc,
        });
    }

    if let Some(entries) = sections.get("output") {
        let r = SectionReader { name: "output", entries, valid: &OUTPUT_KEYS };
        r.check_keys()?;
        let format = if entries.contains_key("format") {
            let (lineno, value) = r.raw("format")?;
            match value {
                "csv" => OutputFormat::Csv,
                other => {
                    return Err(CliError::Config(format!(
                        "line {lineno}: unsupported output format `{other}` (only `csv`)"
                    )))
                }
            }
        } else {
            OutputFormat::Csv
        };
        cfg.output = Some(OutputSpec { path: r.raw("path")?.1.to_string(), format });
    }

    Ok(cfg)
}

fn complex_pair(z: Complex64) -> String {
    format!("{},{}", fmt_float(z.re), fmt_float(z.im))
}

/// Serializes a configuration in a stable section/key order with float
/// values at full double precision, such that
/// `parse_config(serialize_config(cfg)) == cfg`.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let kv = |buf: &mut String, key: &str, value: String| {
        writeln!(buf, "{key} = {value}").expect("string write cannot fail");
    };
    if let Some(p) = &cfg.physical {
        out.push_str("[physical]\n");
        kv(&mut out, "omega_c1", fmt_float(p.omega_c1));
        kv(&mut out, "omega_c2", fmt_float(p.omega_c2));
        kv(&mut out, "omega_m1", fmt_float(p.omega_m1));
        kv(&mut out, "omega_m2", fmt_float(p.omega_m2));
        kv(&mut out, "g1", fmt_float(p.g1));
        kv(&mut out, "g2", fmt_float(p.g2));
        kv(&mut out, "v", fmt_float(p.v));
        kv(&mut out, "kappa1", fmt_float(p.kappa1));
        kv(&mut out, "kappa2", fmt_float(p.kappa2));
        kv(&mut out, "gamma1", fmt_float(p.gamma1));
        kv(&mut out, "gamma2", fmt_float(p.gamma2));
        kv(&mut out, "eps1", complex_pair(p.eps1));
        kv(&mut out, "eps2", complex_pair(p.eps2));
        kv(&mut out, "omega_d1", fmt_float(p.omega_d1));
        kv(&mut out, "omega_d2", fmt_float(p.omega_d2));
        kv(&mut out, "phi", fmt_float(p.phi));
        out.push('\n');
    }
    if let Some((c, rates)) = &cfg.phenomenological {
        out.push_str("[phenomenological]\n");
        kv(&mut out, "g10", fmt_float(c.g10));
        kv(&mut out, "g20", fmt_float(c.g20));
        kv(&mut out, "v0", fmt_float(c.v0));
        kv(&mut out, "theta1", fmt_float(c.theta1));
        kv(&mut out, "theta2", fmt_float(c.theta2));
        kv(&mut out, "theta3", fmt_float(c.theta3));
        kv(&mut out, "delta_eff", fmt_float(rates.delta_eff));
        kv(&mut out, "omega_eff1", fmt_float(rates.omega_eff1));
        kv(&mut out, "omega_eff2", fmt_float(rates.omega_eff2));
        kv(&mut out, "kappa_eff", fmt_float(rates.kappa_eff));
        kv(&mut out, "gamma_eff1", fmt_float(rates.gamma_eff1));
        kv(&mut out, "gamma_eff2", fmt_float(rates.gamma_eff2));
        out.push('\n');
    }
    if let Some(g) = &cfg.grid {
        out.push_str("[grid]\n");
        kv(&mut out, "omega_min", fmt_float(g.omega_min));
        kv(&mut out, "omega_max", fmt_float(g.omega_max));
        kv(&mut out, "points", g.points.to_string());
        out.push('\n');
    }
    if let Some(s) = &cfg.sweep {
        out.push_str("[sweep]\n");
        let axis = |a: &AxisSpec| {
            format!("{}:{}:{}:{}", a.name, fmt_float(a.start), fmt_float(a.stop), a.count)
        };
        kv(&mut out, "axis1", axis(&s.axis1));
        if let Some(a2) = &s.axis2 {
            kv(&mut out, "axis2", axis(a2));
        }
        kv(&mut out, "metric", s.metric.clone());
        out.push('\n');
    }
    if let Some(b) = &cfg.bell {
        out.push_str("[bell]\n");
        kv(&mut out, "theta_min", fmt_float(b.theta_min));
        kv(&mut out, "theta_max", fmt_float(b.theta_max));
        kv(&mut out, "theta_points", b.theta_points.to_string());
        kv(&mut out, "alpha2_min", fmt_float(b.alpha2_min));
        kv(&mut out, "alpha2_max", fmt_float(b.alpha2_max));
        kv(&mut out, "alpha2_points", b.alpha2_points.to_string());
        kv(&mut out, "n_trunc", b.n_trunc.to_string());
        out.push('\n');
    }
    if let Some(o) = &cfg.output {
        out.push_str("[output]\n");
        kv(&mut out, "path", o.path.clone());
        let OutputFormat::Csv = o.format;
        kv(&mut out, "format", "csv".to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_text() -> &'static str {
        "# frozen working point\n\
         [physical]\n\
         omega_c1 = 2.0\n\
         omega_c2 = 2.0\n\
         omega_m1 = 1.0\n\
         omega_m2 = 1.0\n\
         g1 = 1e-4\n\
         g2 = 1e-4\n\
         v = 0.0\n\
         kappa1 = 0.1\n\
         kappa2 = 0.01\n\
         gamma1 = 0.001\n\
         gamma2 = 0.001\n\
         eps1 = 1.0,0.0\n\
         eps2 = 0.0,0.0\n\
         omega_d1 = 1.0\n\
         omega_d2 = 1.0\n\
         phi = 1.5707963267948966\n\
         \n\
         [grid]\n\
         omega_min = 0.9\n\
         omega_max = 1.1\n\
         points = 101\n\
         \n\
         [output]\n\
         path = out.csv\n"
    }

    #[test]
    fn parses_physical_regime() {
        let cfg = parse_config(sample_text()).unwrap();
        let p = cfg.physical.unwrap();
        assert_eq!(p.kappa1, 0.1);
        assert_eq!(p.kappa2, 0.01);
        assert_eq!(p.gamma1, 0.001);
        assert_eq!(p.eps1, Complex64::new(1.0, 0.0));
        assert_eq!(cfg.grid.unwrap().points, 101);
        assert_eq!(cfg.output.unwrap().path, "out.csv");
        assert!(cfg.phenomenological.is_none());
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn malformed_complex_names_the_line() {
        let text = sample_text().replace("eps1 = 1.0,0.0", "eps1 = 1.0;0.2");
        let err = parse_config(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 14"), "got: {msg}");
        assert!(msg.contains("eps1"), "got: {msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_key_gets_suggestion() {
        let text = sample_text().replace("kappa1 = 0.1", "kapa1 = 0.1");
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(msg.contains("unknown key `kapa1`"), "got: {msg}");
        assert!(msg.contains("did you mean `kappa1`?"), "got: {msg}");
    }

    #[test]
    fn unknown_section_and_syntax_errors() {
        let msg = parse_config("[physics]\n").unwrap_err().to_string();
        assert!(msg.contains("unknown section `[physics]`"), "got: {msg}");
        assert!(msg.contains("did you mean `physical`?"), "got: {msg}");

        let msg = parse_config("[grid]\nomega_min 0.5\n").unwrap_err().to_string();
        assert!(msg.contains("line 2"), "got: {msg}");

        let msg = parse_config("omega_min = 0.5\n").unwrap_err().to_string();
        assert!(msg.contains("before any section"), "got: {msg}");

        let msg = parse_config("[grid\n").unwrap_err().to_string();
        assert!(msg.contains("unterminated"), "got: {msg}");
    }

    #[test]
    fn duplicate_key_and_section_are_rejected() {
        let text = "[grid]\nomega_min = 0.5\nomega_min = 0.6\n";
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("duplicate key `omega_min`"), "got: {msg}");

        let text = "[grid]\nomega_min = 0.5\nomega_max = 1.0\npoints = 3\n[grid]\n";
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("duplicate section"), "got: {msg}");
    }

    #[test]
    fn missing_required_key_is_reported() {
        let msg = parse_config("[grid]\nomega_min = 0.5\nomega_max = 1.0\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("missing required key `points`"), "got: {msg}");
    }

    #[test]
    fn sweep_axis_and_bell_defaults() {
        let text = "[sweep]\naxis1 = g10:0.0:0.1:21\nmetric = MaxT_b1a2\n\n\
                    [bell]\ntheta_min = 0.0\ntheta_max = 3.14\ntheta_points = 10\n\
                    alpha2_min = 0.0\nalpha2_max = 1.0\nalpha2_points = 5\n";
        let cfg = parse_config(text).unwrap();
        let sweep = cfg.sweep.unwrap();
        assert_eq!(sweep.axis1.name, "g10");
        assert_eq!(sweep.axis1.count, 21);
        assert!(sweep.axis2.is_none());
        assert_eq!(sweep.metric, "MaxT_b1a2");
        assert_eq!(cfg.bell.unwrap().n_trunc, 20);

        let bad = "[sweep]\naxis1 = g10:0.0:0.1\nmetric = MaxT_b1a2\n";
        let msg = parse_config(bad).unwrap_err().to_string();
        assert!(msg.contains("name:start:stop:count"), "got: {msg}");
    }

    #[test]
    fn unsupported_format_is_rejected() {
        let text = "[output]\npath = x.csv\nformat = json\n";
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("unsupported output format `json`"), "got: {msg}");
    }

    prop_compose! {
        fn arb_axis()(
            name in "[a-z][a-z0-9_]{0,8}",
            start in -10.0f64..10.0,
            stop in -10.0f64..10.0,
            count in 1usize..100,
        ) -> AxisSpec {
            AxisSpec { name, start, stop, count }
        }
    }

    prop_compose! {
        fn arb_physical()(
            freqs in (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0),
            coup in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
            rates in (1e-3f64..1.0, 1e-3f64..1.0, 1e-5f64..0.1, 1e-5f64..0.1),
            eps in ((-2.0f64..2.0, -2.0f64..2.0), (-2.0f64..2.0, -2.0f64..2.0)),
            drives in (0.1f64..10.0, 0.1f64..10.0, -7.0f64..7.0),
        ) -> PhysicalParams {
            PhysicalParams {
                omega_c1: freqs.0, omega_c2: freqs.1,
                omega_m1: freqs.2, omega_m2: freqs.3,
                g1: coup.0, g2: coup.1, v: coup.2,
                kappa1: rates.0, kappa2: rates.1, gamma1: rates.2, gamma2: rates.3,
                eps1: Complex64::new(eps.0.0, eps.0.1),
                eps2: Complex64::new(eps.1.0, eps.1.1),
                omega_d1: drives.0, omega_d2: drives.1, phi: drives.2,
            }
        }
    }

    prop_compose! {
        fn arb_phenomenological()(
            mags in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
            phases in (-7.0f64..7.0, -7.0f64..7.0, -7.0f64..7.0),
            freqs in (0.5f64..2.0, 0.5f64..2.0, 0.5f64..2.0),
            rates in (1e-3f64..0.5, 1e-3f64..0.5, 1e-3f64..0.5),
        ) -> (PhenomenologicalCouplings, EffectiveRates) {
            (
                PhenomenologicalCouplings {
                    g10: mags.0, g20: mags.1, v0: mags.2,
                    theta1: phases.0, theta2: phases.1, theta3: phases.2,
                },
                EffectiveRates {
                    delta_eff: freqs.0, omega_eff1: freqs.1, omega_eff2: freqs.2,
                    kappa_eff: rates.0, gamma_eff1: rates.1, gamma_eff2: rates.2,
                },
            )
        }
    }

    prop_compose! {
        fn arb_config()(
            phys in proptest::option::of(arb_physical()),
            phen in proptest::option::of(arb_phenomenological()),
            grid in proptest::option::of((-5.0f64..0.0, 0.1f64..5.0, 2usize..500)),
            sweep in proptest::option::of((arb_axis(), proptest::option::of(arb_axis()),
                "[A-Za-z][A-Za-z0-9_]{0,12}")),
            bell in proptest::option::of((0.0f64..1.0, 1.0f64..3.2, 2usize..50,
                0.0f64..0.4, 0.5f64..1.0, 2usize..50, 2usize..30)),
            output in proptest::option::of("[a-z][a-z0-9_./]{0,20}"),
        ) -> RunConfig {
            RunConfig {
                physical: phys,
                phenomenological: phen,
                grid: grid.map(|(omega_min, omega_max, points)| GridSpec {
                    omega_min, omega_max, points,
                }),
                sweep: sweep.map(|(axis1, axis2, metric)| SweepSpec { axis1, axis2, metric }),
                bell: bell.map(|t| BellSpec {
                    theta_min: t.0, theta_max: t.1, theta_points: t.2,
                    alpha2_min: t.3, alpha2_max: t.4, alpha2_points: t.5,
                    n_trunc: t.6,
                }),
                output: output.map(|path| OutputSpec { path, format: OutputFormat::Csv }),
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(cfg in arb_config()) {
            let text = serialize_config(&cfg);
            let parsed = parse_config(&text).unwrap();
            prop_assert_eq!(parsed, cfg);
        }
    }
}
