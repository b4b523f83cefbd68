//! Pipeline orchestration behind the command-line front end: a validated
//! run configuration, the end-to-end pipeline with file artifacts, and the
//! plain-text `key = value` config format. Everything is deterministic for
//! a fixed configuration: identical runs write byte-identical artifacts.

use anyhow::{bail, Context, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use trisphere_core::assembly::{assemble_sphere, triangulate_sphere, SphereCellulation};
use trisphere_core::field::{make_field, parse_poly, Field, FieldElement};
use trisphere_core::heffter::{heffter_cellulation, heffter_triangulation, HeffterSpec};
use trisphere_core::io;
use trisphere_core::verify::{count_distinct_sample, scaling_report, verify_sphere, MRule};

/// How the octahedron choice vector is produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChoiceSource {
    /// All-zeros vector.
    Zeros,
    /// Uniform trits from the given seed.
    Seed(u64),
    /// Explicit ternary string, big-endian over the registry order (the
    /// leftmost digit drives the first registered octahedron).
    Explicit(String),
}

impl ChoiceSource {
    pub fn parse(text: &str) -> Result<ChoiceSource> {
        if text == "zeros" {
            return Ok(ChoiceSource::Zeros);
        }
        if let Some(k) = text.strip_prefix("seed:") {
            return Ok(ChoiceSource::Seed(k.parse().context("bad choice seed")?));
        }
        if !text.is_empty() && text.bytes().all(|b| (b'0'..=b'2').contains(&b)) {
            return Ok(ChoiceSource::Explicit(text.to_string()));
        }
        bail!("choices must be `zeros`, `seed:K`, or a ternary string")
    }

    pub fn materialize(&self, registry_size: usize) -> Result<Vec<u8>> {
        match self {
            ChoiceSource::Zeros => Ok(vec![0; registry_size]),
            ChoiceSource::Seed(k) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*k);
                Ok((0..registry_size).map(|_| rng.gen_range(0..3u8)).collect())
            }
            ChoiceSource::Explicit(s) => {
                if s.len() != registry_size {
                    bail!(
                        "ternary string has {} digits, registry has {} octahedra",
                        s.len(),
                        registry_size
                    );
                }
                Ok(s.bytes().map(|b| b - b'0').collect())
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            ChoiceSource::Zeros => "zeros".into(),
            ChoiceSource::Seed(k) => format!("seed:{k}"),
            ChoiceSource::Explicit(s) => s.clone(),
        }
    }
}

/// Validated pipeline configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub q: u64,
    /// Alpha token ("auto" resolves to the first primitive element).
    pub alpha: String,
    /// Modulus override in the comma syntax, when the default coordinates
    /// are not wanted.
    pub modulus: Option<String>,
    pub m: usize,
    pub choices: ChoiceSource,
    pub flip_budget: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub verify: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            q: 5,
            alpha: "auto".into(),
            modulus: None,
            m: 2,
            choices: ChoiceSource::Zeros,
            flip_budget: 1_000_000,
            seed: 0,
            out_dir: PathBuf::from("."),
            verify: true,
        }
    }
}

/// Factors q as p^e; None when q is not a prime power.
pub fn prime_power(q: u64) -> Option<(u64, usize)> {
    if q < 2 {
        return None;
    }
    let mut p = q;
    let mut d = 2;
    while d * d <= q {
        if q % d == 0 {
            p = d;
            break;
        }
        d += 1;
    }
    let mut e = 0;
    let mut n = q;
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    (n == 1).then_some((p, e))
}

/// Builds the field and resolves alpha for a validated q.
pub fn resolve_field(q: u64, alpha: &str, modulus: Option<&str>) -> Result<(Field, FieldElement)> {
    if q % 4 != 1 || q < 5 {
        bail!("q = {q} must be a prime power congruent to 1 mod 4");
    }
    let (p, e) = prime_power(q).with_context(|| format!("q = {q} is not a prime power"))?;
    let modulus_coeffs = modulus.map(parse_poly).transpose()?;
    let field = make_field(p, e, modulus_coeffs.as_deref())?;
    let alpha = if alpha == "auto" {
        field.first_primitive()
    } else {
        let coeffs = parse_poly(alpha)?;
        let a = field.element(&coeffs);
        if a.is_zero() || a.multiplicative_order() != q - 1 {
            bail!("alpha = {alpha} is not a primitive element of GF({q})");
        }
        a
    };
    Ok((field, alpha))
}

pub fn build_spec(q: u64, alpha: &str, modulus: Option<&str>) -> Result<HeffterSpec> {
    let (field, alpha) = resolve_field(q, alpha, modulus)?;
    Ok(HeffterSpec::new(field, alpha)?)
}

/// Plain-text config: one `key = value` per line, `#` comments.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .with_context(|| format!("config line {} is not `key = value`", lineno + 1))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Applies config-file values to a run configuration.
pub fn apply_config(cfg: &mut RunConfig, kv: &BTreeMap<String, String>) -> Result<()> {
    for (k, v) in kv {
        match k.as_str() {
            "q" => cfg.q = v.parse().context("config q")?,
            "alpha" => cfg.alpha = v.clone(),
            "modulus" => cfg.modulus = Some(v.clone()),
            "m" => cfg.m = v.parse().context("config m")?,
            "choices" => cfg.choices = ChoiceSource::parse(v)?,
            "flip_budget" => cfg.flip_budget = v.parse().context("config flip_budget")?,
            "seed" => cfg.seed = v.parse().context("config seed")?,
            "out_dir" => cfg.out_dir = PathBuf::from(v),
            "verify" => cfg.verify = v.parse().context("config verify")?,
            other => bail!("unknown config key {other:?}"),
        }
    }
    Ok(())
}

/// Artifact paths and the outcome of one pipeline run.
#[derive(Debug)]
pub struct PipelineOutcome {
    pub files: Vec<PathBuf>,
    pub verified: Option<bool>,
    pub registry_size: usize,
    pub n_vertices: usize,
}

/// End to end: Heffter complexes, assembled sphere, selected triangulation,
/// verification report. Identical configs produce byte-identical artifacts
/// (the report file omits wall-clock timing for that reason).
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutcome> {
    let spec = build_spec(cfg.q, &cfg.alpha, cfg.modulus.as_deref())?;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut files = Vec::new();
    let write = |name: &str, contents: &str, files: &mut Vec<PathBuf>| -> Result<PathBuf> {
        let path = cfg.out_dir.join(name);
        fs::write(&path, contents)?;
        files.push(path.clone());
        Ok(path)
    };

    let cell = heffter_cellulation(&spec);
    write(
        "heffter-cellulation.txt",
        &io::write_cellulation(&cell),
        &mut files,
    )?;
    let tri = heffter_triangulation(&spec);
    write(
        "heffter-triangulation.txt",
        &io::write_facets(&tri),
        &mut files,
    )?;

    let sphere = assemble_sphere(&spec, cfg.m)?;
    write("sphere.txt", &io::write_sphere(&sphere), &mut files)?;

    let choices = cfg.choices.materialize(sphere.registry_size())?;
    let t = triangulate_sphere(&sphere, &choices)?;
    write("triangulation.txt", &io::write_facets(&t), &mut files)?;

    let verified = if cfg.verify {
        let report = verify_sphere(&t, cfg.flip_budget, cfg.seed);
        let mut text = String::new();
        let _ = writeln!(text, "q: {}", cfg.q);
        let _ = writeln!(text, "alpha: {}", spec.alpha().token());
        let _ = writeln!(text, "m: {}", cfg.m);
        let _ = writeln!(text, "choices: {}", cfg.choices.describe());
        // The artifact must be byte-stable across runs, so the wall-clock
        // line stays out of the file (stdout keeps it).
        for line in io::render_report(&report).lines() {
            if !line.starts_with("elapsed_ms:") {
                let _ = writeln!(text, "{line}");
            }
        }
        write("report.txt", &text, &mut files)?;
        println!("{}", io::render_report(&report));
        Some(report.passes())
    } else {
        None
    };

    Ok(PipelineOutcome {
        files,
        verified,
        registry_size: sphere.registry_size(),
        n_vertices: sphere.n_vertices(),
    })
}

// --- subcommand bodies ------------------------------------------------------

pub fn cmd_heffter(q: u64, alpha: &str, modulus: Option<&str>, out_dir: &Path) -> Result<()> {
    let spec = build_spec(q, alpha, modulus)?;
    fs::create_dir_all(out_dir)?;
    let cell = heffter_cellulation(&spec);
    let tri = heffter_triangulation(&spec);
    let cp = out_dir.join("heffter-cellulation.txt");
    let tp = out_dir.join("heffter-triangulation.txt");
    fs::write(&cp, io::write_cellulation(&cell))?;
    fs::write(&tp, io::write_facets(&tri))?;
    println!(
        "wrote {} and {} (q={q}, alpha={})",
        cp.display(),
        tp.display(),
        spec.alpha().token()
    );
    Ok(())
}

pub fn cmd_assemble(
    q: u64,
    alpha: &str,
    modulus: Option<&str>,
    m: usize,
    out: &Path,
) -> Result<()> {
    let spec = build_spec(q, alpha, modulus)?;
    let sphere = assemble_sphere(&spec, m)?;
    fs::write(out, io::write_sphere(&sphere))?;
    println!(
        "wrote {} ({} vertices, {} tetrahedra, {} octahedra)",
        out.display(),
        sphere.n_vertices(),
        sphere.tetra.len(),
        sphere.registry_size()
    );
    Ok(())
}

pub fn load_sphere(path: &Path) -> Result<SphereCellulation> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(io::parse_sphere(&text)?)
}

pub fn cmd_triangulate(input: &Path, choices: &str, out: &Path) -> Result<()> {
    let sphere = load_sphere(input)?;
    let source = ChoiceSource::parse(choices)?;
    let vector = source.materialize(sphere.registry_size())?;
    let t = triangulate_sphere(&sphere, &vector)?;
    fs::write(out, io::write_facets(&t))?;
    println!(
        "wrote {} ({} facets on {} vertices)",
        out.display(),
        t.facets().len(),
        t.used_vertices().len()
    );
    Ok(())
}

/// Prints the verification report; the returned flag drives the exit code.
pub fn cmd_verify(input: &Path, flip_budget: u64, seed: u64) -> Result<bool> {
    let text =
        fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let c = io::parse_facets(&text)?;
    let report = verify_sphere(&c, flip_budget, seed);
    print!("{}", io::render_report(&report));
    Ok(report.passes())
}

pub fn cmd_count(input: &Path, k: usize, seed: u64) -> Result<()> {
    let sphere = load_sphere(input)?;
    let est = count_distinct_sample(
        &sphere,
        k,
        seed,
        trisphere_core::canonical::DEFAULT_BUDGET,
    )?;
    println!("samples: {}", est.k);
    println!("seed: {}", est.seed);
    println!("distinct: {}", est.distinct);
    println!("collisions: {}", est.collisions.len());
    for (i, j, witness) in &est.collisions {
        let pairs: Vec<String> = witness.iter().map(|(a, b)| format!("{a}->{b}")).collect();
        println!("collision {i} {j}: {}", pairs.join(" "));
    }
    println!("log2_lower_bound: {:.1}", est.log2_lower_bound);
    Ok(())
}

pub fn cmd_scaling(q_list: &[u64], m_rule: &str, log_base: u32) -> Result<()> {
    let rule = match m_rule {
        "cubed" => MRule::Cubed,
        other => match other.strip_prefix("fixed:") {
            Some(k) => MRule::Fixed(k.parse().context("bad fixed m")?),
            None => bail!("m-rule must be `cubed` or `fixed:K`"),
        },
    };
    if !(log_base == 2 || log_base == 3) {
        bail!("log base must be 2 or 3");
    }
    let rows = scaling_report(q_list, rule, log_base)?;
    print!("{}", io::render_scaling(&rows));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_power_detection() {
        assert_eq!(prime_power(5), Some((5, 1)));
        assert_eq!(prime_power(9), Some((3, 2)));
        assert_eq!(prime_power(25), Some((5, 2)));
        assert_eq!(prime_power(6), None);
        assert_eq!(prime_power(1), None);
    }

    #[test]
    fn q6_is_rejected_before_any_build() {
        let err = build_spec(6, "auto", None).unwrap_err();
        assert!(err.to_string().contains("1 mod 4"));
    }

    #[test]
    fn auto_alpha_resolves_deterministically() {
        let spec = build_spec(5, "auto", None).unwrap();
        assert_eq!(spec.alpha().token(), "2");
        let spec13 = build_spec(13, "auto", None).unwrap();
        assert_eq!(spec13.alpha().token(), "2");
    }

    #[test]
    fn figure_coordinates_are_reproducible() {
        let spec = build_spec(9, "2,2", Some("2,1,1")).unwrap();
        assert_eq!(spec.alpha().token(), "2,2");
        assert_eq!(spec.field().modulus(), &[2, 1, 1]);
    }

    #[test]
    fn choice_sources() {
        assert_eq!(ChoiceSource::parse("zeros").unwrap(), ChoiceSource::Zeros);
        assert_eq!(ChoiceSource::parse("seed:7").unwrap(), ChoiceSource::Seed(7));
        let e = ChoiceSource::parse("0120").unwrap();
        assert_eq!(e.materialize(4).unwrap(), vec![0, 1, 2, 0]);
        assert!(e.materialize(5).is_err());
        assert!(ChoiceSource::parse("0123").is_err());
        let s = ChoiceSource::Seed(9).materialize(10).unwrap();
        assert_eq!(s, ChoiceSource::Seed(9).materialize(10).unwrap());
    }

    #[test]
    fn config_file_round() {
        let dir = std::env::temp_dir().join("trisphere-config-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        fs::write(&path, "# comment\nq = 5\nm = 2\nchoices = zeros\nseed = 3\n").unwrap();
        let kv = parse_config_file(&path).unwrap();
        let mut cfg = RunConfig::default();
        apply_config(&mut cfg, &kv).unwrap();
        assert_eq!(cfg.q, 5);
        assert_eq!(cfg.m, 2);
        assert_eq!(cfg.seed, 3);
    }
}
