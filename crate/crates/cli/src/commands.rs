use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Deserialize;
use serde_json::{json, Value};

use mfhh::hochschild::{self, HHError, HHTable};
use mfhh::koszul::{self, KoszulError};
use mfhh::presets::{self, Problem};
use mfhh::specseq::{self, StrataData};
use mfhh::symmetry::{self, GroupJson, SubgroupSpec};
use mfhh::trivext::{self, AlgebraJson, QuiverAlgebra};
use mfhh::unfolding;
use mfhh::wpoly::{self, PolyJson, TermJson, WeightedPolynomial};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_CONSISTENCY: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "mfhh", version, about = "Hochschild invariants of weighted homogeneous singularities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value = "table")]
    pub format: Format,
    /// Worker threads for sector and cell parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Refuse Koszul computations until the degree convention self-test has run.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Cone,
    General,
    Both,
}

#[derive(Args, Debug)]
pub struct Source {
    /// A JSON file or a family name (fermat, doublecover, sylvester, cusp, cusp-double, odp, odp-double, tacnode, E12, ...).
    pub source: String,
    pub n: Option<usize>,
    /// full | phi_gm
    #[arg(long)]
    pub group: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Weight system, Milnor number, w-vector, character group, sector census.
    Analyze(Source),
    /// Equivariant Hochschild cohomology of the matrix factorization category.
    Hh {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        t_max: Option<usize>,
        #[arg(long, value_enum, default_value = "general")]
        mode: Mode,
    },
    /// Equivariant semiuniversal unfolding; `--set u_4=1` builds the unfolded polynomial.
    Unfolding {
        #[command(flatten)]
        src: Source,
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
    },
    /// E1 page and degree bounds. SOURCE is fermat, doublecover, or a strata JSON file.
    Specseq {
        source: String,
        n: Option<usize>,
        #[arg(long, default_value_t = -8, allow_negative_numbers = true)]
        p_min: i64,
        #[arg(long)]
        n_max: Option<i64>,
    },
    /// Graded Hochschild cohomology of a finite-dimensional algebra.
    /// SOURCE is cusp, fermat N, doublecover N, or an algebra JSON file.
    AlgebraHh {
        source: String,
        n: Option<usize>,
        #[arg(long, default_value_t = 2)]
        p_max: usize,
        #[arg(long, default_value_t = -8, allow_negative_numbers = true)]
        s_min: i64,
    },
    /// HH, unfolding, spectral sequence and mirror-algebra formality test for fermat or doublecover.
    Report {
        family: String,
        n: usize,
        #[arg(long, default_value_t = -8, allow_negative_numbers = true)]
        p_min: i64,
    },
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Consistency(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Consistency(_) => EXIT_CONSISTENCY,
        }
    }
}

impl From<HHError> for CliError {
    fn from(e: HHError) -> Self {
        match e {
            HHError::CalibrationRequired | HHError::Koszul(KoszulError::CalibrationFailed(_)) => {
                CliError::Consistency(e.to_string())
            }
            e => CliError::Input(e.to_string()),
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

pub fn run(cli: Cli) -> (String, u8) {
    if let Some(j) = cli.jobs {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    koszul::set_strict(cli.strict);
    if cli.strict {
        if let Err(e) = koszul::calibrate() {
            return (format!("error: {e}\n"), EXIT_CONSISTENCY);
        }
    }
    let res = match &cli.command {
        Command::Analyze(src) => cmd_analyze(src),
        Command::Hh { src, t_max, mode } => cmd_hh(src, *t_max, *mode),
        Command::Unfolding { src, set } => cmd_unfolding(src, set),
        Command::Specseq { source, n, p_min, n_max } => cmd_specseq(source, *n, *p_min, *n_max),
        Command::AlgebraHh { source, n, p_max, s_min } => cmd_algebra_hh(source, *n, *p_max, *s_min),
        Command::Report { family, n, p_min } => cmd_report(family, *n, *p_min),
    };
    match res {
        Ok(out) => (render(out, cli.format), 0),
        Err(e) => {
            let (kind, msg) = match &e {
                CliError::Input(m) => ("input error", m),
                CliError::Consistency(m) => ("consistency failure", m),
            };
            (format!("{kind}: {msg}\n"), e.code())
        }
    }
}

/// Text and JSON renderings of one result.
pub struct Output {
    text: String,
    json: Value,
}

fn render(o: Output, f: Format) -> String {
    match f {
        Format::Table => o.text,
        Format::Json => serde_json::to_string_pretty(&o.json).expect("serializable") + "\n",
    }
}

#[derive(Deserialize)]
struct ProblemFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(flatten)]
    poly: PolyJson,
    #[serde(default)]
    group: Option<GroupJson>,
    #[serde(default)]
    x0_terms: Vec<TermJson>,
}

fn parse_group(g: &str) -> Result<SubgroupSpec, CliError> {
    SubgroupSpec::from_json(&GroupJson { kind: g.to_string(), generators: vec![] }).map_err(input)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))
}

fn is_file(s: &str) -> bool {
    s.ends_with(".json") || Path::new(s).is_file()
}

pub fn load_problem(src: &Source) -> Result<Problem, CliError> {
    let group = src.group.as_deref().map(parse_group).transpose()?;
    if !is_file(&src.source) {
        return presets::by_name(&src.source, src.n, group).map_err(CliError::Input);
    }
    let f: ProblemFile = read_json(&src.source)?;
    let w = WeightedPolynomial::from_json(&f.poly).map_err(input)?.with_inferred_weights().map_err(input)?;
    let g = match (group, &f.group) {
        (Some(g), _) => g,
        (None, Some(g)) => SubgroupSpec::from_json(g).map_err(input)?,
        (None, None) => SubgroupSpec::Full,
    };
    let name = f.name.unwrap_or_else(|| {
        Path::new(&src.source).file_stem().map_or("input".into(), |s| s.to_string_lossy().into_owned())
    });
    let mut p = Problem::new(name, w, g);
    if !f.x0_terms.is_empty() {
        let x0 = WeightedPolynomial::from_json(&PolyJson { variables: p.variable_names(), terms: f.x0_terms })
            .map_err(input)?;
        p.x0_terms = x0.terms().to_vec();
    }
    p.lattice().map_err(input)?;
    Ok(p)
}

fn cmd_analyze(src: &Source) -> Result<Output, CliError> {
    let p = load_problem(src)?;
    let ws = p.w.require_weights().map_err(input)?.clone();
    let mu = wpoly::milnor_number(&ws).map_err(input)?;
    let wv = wpoly::exponents_w_vector(&ws).map_err(input)?;
    let lat = p.lattice().map_err(input)?;
    let sectors = symmetry::enumerate_ker_chi(&lat).map_err(input)?;
    let census = symmetry::sector_census(&lat, &sectors);
    let fmt_ints = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let mut t = String::new();
    writeln!(t, "name: {}", p.name).unwrap();
    writeln!(t, "w = {}", p.w).unwrap();
    writeln!(t, "weights: ({};{})", fmt_ints(&ws.weights), ws.degree).unwrap();
    writeln!(t, "d0: {}", ws.d0()).unwrap();
    writeln!(t, "mu: {mu}").unwrap();
    writeln!(t, "w-vector: w0 = {}, w = ({})", wv.w0(), fmt_ints(wv.tail())).unwrap();
    writeln!(t, "character group: {}", lat.describe()).unwrap();
    writeln!(t, "chi = {}, chi0 = {}", lat.chi(), lat.chi0()).unwrap();
    writeln!(t, "|ker chi| = {}", sectors.len()).unwrap();
    writeln!(
        t,
        "sectors: identity {}, fixing only x0 {}, fixing nothing {}, other {}",
        census.all, census.x0_only, census.empty, census.other
    )
    .unwrap();
    let json = json!({
        "name": p.name,
        "polynomial": p.w.to_json(),
        "weights": ws.weights,
        "degree": ws.degree,
        "d0": ws.d0(),
        "mu": mu,
        "w_vector": wv.full,
        "character_group": {"free_rank": 1, "torsion": lat.moduli()},
        "chi": lat.chi().to_string(),
        "chi0": lat.chi0().to_string(),
        "ker_chi_order": sectors.len(),
        "census": census,
    });
    Ok(Output { text: t, json })
}

fn compute_hh(p: &Problem, t_max: usize, mode: Mode) -> Result<HHTable, CliError> {
    match mode {
        Mode::Cone => Ok(hochschild::hh_cone(p, t_max)?),
        Mode::General => Ok(hochschild::hh_mf(p, t_max, true)?),
        Mode::Both => {
            let a = hochschild::hh_cone(p, t_max)?;
            let b = hochschild::hh_mf(p, t_max, true)?;
            if !a.same_classes(&b) {
                let mut diff = String::from("cone and general paths disagree");
                for (ra, rb) in a.rows.iter().zip(&b.rows) {
                    if ra.classes != rb.classes {
                        write!(diff, "\n  HH^{}: cone {} / general {}", ra.t, ra.render(), rb.render()).unwrap();
                    }
                }
                return Err(CliError::Consistency(diff));
            }
            Ok(b)
        }
    }
}

fn hh_json(table: &HHTable) -> Value {
    serde_json::to_value(table).expect("serializable")
}

fn cmd_hh(src: &Source, t_max: Option<usize>, mode: Mode) -> Result<Output, CliError> {
    let p = load_problem(src)?;
    let t_max = t_max.unwrap_or_else(|| hochschild::default_t_max(p.n()));
    let table = compute_hh(&p, t_max, mode)?;
    let mut text = table.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    if table.weights_tracked {
        let tw = hochschild::twisted_deformation_detector(&table);
        writeln!(text, "twisted deformations: {}", if tw.twisted { "present" } else { "none" }).unwrap();
        writeln!(text, "deformation dimension: {}", hochschild::deformation_dimension(&table)).unwrap();
    }
    Ok(Output { json: hh_json(&table), text })
}

fn parse_assignment(set: &[String]) -> Result<BTreeMap<String, BigRational>, CliError> {
    set.iter()
        .map(|s| {
            let (k, v) = s.split_once('=').ok_or_else(|| CliError::Input(format!("expected NAME=VALUE, got {s:?}")))?;
            let v: BigRational = v.trim().parse().map_err(|_| CliError::Input(format!("bad rational {v:?}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn cmd_unfolding(src: &Source, set: &[String]) -> Result<Output, CliError> {
    let p = load_problem(src)?;
    let basis = unfolding::unfolding_basis(&p).map_err(input)?;
    let names = p.w.variables();
    let mut t = String::new();
    writeln!(t, "parameter\tmonomial\tweight").unwrap();
    for d in basis.positive() {
        let w_j = d.w_j.expect("positive");
        let m = match wpoly::Monomial(d.j.clone()).render(names).as_str() {
            "1" => format!("x0^{w_j}"),
            m => format!("x0^{w_j}*{m}"),
        };
        writeln!(t, "{}\t{}\t{}", d.name.as_deref().unwrap_or("?"), m, w_j).unwrap();
    }
    writeln!(t, "dim U = {}", basis.positive().count()).unwrap();
    let mut json = json!({ "name": p.name, "basis": basis, "dim_u": basis.positive().count() });
    if !set.is_empty() {
        let a = parse_assignment(set)?;
        let poly = unfolding::build_unfolded_polynomial(&p, &a).map_err(input)?;
        writeln!(t, "W = {poly}").unwrap();
        json["unfolded"] = serde_json::to_value(poly.to_json()).expect("serializable");
        let ws = poly.weight_system().expect("weighted");
        json["unfolded_weights"] = json!({"weights": ws.weights, "degree": ws.degree});
    }
    Ok(Output { text: t, json })
}

fn load_strata(source: &str, n: Option<usize>) -> Result<StrataData, CliError> {
    let need_n = || n.filter(|&n| n >= 2).ok_or_else(|| CliError::Input(format!("{source} needs n >= 2")));
    match source.to_ascii_lowercase().as_str() {
        "fermat" => Ok(specseq::fermat_strata(need_n()?)),
        "doublecover" | "double-cover" => Ok(specseq::doublecover_strata(need_n()?)),
        _ if is_file(source) => read_json(source),
        _ => Err(CliError::Input(format!("unknown strata source {source:?}"))),
    }
}

struct SpecseqResult {
    page: specseq::E1Page,
    bounds: Vec<specseq::DegreeBound>,
}

fn compute_specseq(strata: &StrataData, p_min: i64, n_max: i64) -> Result<SpecseqResult, CliError> {
    let page = specseq::e1_page(strata, p_min).map_err(input)?;
    let bounds = specseq::degree_bounds(&page, n_max).map_err(input)?;
    Ok(SpecseqResult { page, bounds })
}

fn bounds_text(bounds: &[specseq::DegreeBound]) -> String {
    let mut t = String::new();
    for b in bounds {
        let tag = if b.exact { " exact" } else { "" };
        writeln!(t, "SH^{}: [{}, {}]{}", b.degree, b.lower, b.upper, tag).unwrap();
    }
    t
}

fn cmd_specseq(source: &str, n: Option<usize>, p_min: i64, n_max: Option<i64>) -> Result<Output, CliError> {
    let strata = load_strata(source, n)?;
    // default: the largest degree the computed columns determine
    let n_max = match n_max {
        Some(x) => x,
        None => specseq::e1_page(&strata, p_min)
            .map_err(input)?
            .uncomputed_floor
            .map_or(-p_min, |f| f - 2)
            .max(0),
    };
    let r = compute_specseq(&strata, p_min, n_max)?;
    let text = format!("{}\n{}", r.page.render(), bounds_text(&r.bounds));
    let json = json!({ "e1": r.page, "bounds": r.bounds });
    Ok(Output { text, json })
}

fn mirror_algebra(source: &str, n: Option<usize>) -> Result<QuiverAlgebra, CliError> {
    let need_n = || n.filter(|&n| n >= 2).ok_or_else(|| CliError::Input(format!("{source} needs n >= 2")));
    match source.to_ascii_lowercase().as_str() {
        "cusp" => Ok(trivext::cusp_algebra()),
        "fermat" => {
            let n = need_n()?;
            trivext::diagonal_mirror_algebra(&vec![n as u32 + 1; n], n as i64 - 1).map_err(input)
        }
        "doublecover" | "double-cover" => {
            let n = need_n()?;
            let mut e = vec![2u32];
            e.extend(vec![2 * n as u32; n - 1]);
            trivext::diagonal_mirror_algebra(&e, n as i64 - 1).map_err(input)
        }
        _ if is_file(source) => {
            let j: AlgebraJson = read_json(source)?;
            trivext::algebra_from_json(&j).map_err(input)
        }
        _ => Err(CliError::Input(format!("unknown algebra source {source:?}"))),
    }
}

fn cmd_algebra_hh(source: &str, n: Option<usize>, p_max: usize, s_min: i64) -> Result<Output, CliError> {
    let a = mirror_algebra(source, n)?;
    if s_min > 0 {
        return Err(CliError::Input("s_min must be <= 0".into()));
    }
    let table = trivext::hochschild_algebra(&a, p_max, s_min).map_err(input)?;
    let eu = trivext::euler_derivation(&a);
    let mut t = format!("dim A = {}\n", a.dim());
    t.push_str(&table.render());
    for p in 0..=p_max {
        writeln!(t, "HH^{p}(A)_<0 total: {}", table.negative_total(p)).unwrap();
    }
    writeln!(t, "Euler derivation: {}", if eu.nontrivial { "nonzero class in HH^1(A)_0" } else { "trivial" }).unwrap();
    let json = json!({ "dim": a.dim(), "table": table, "euler": eu });
    Ok(Output { text: t, json })
}

fn ungraded_dims(t: &HHTable) -> Vec<usize> {
    t.rows.iter().map(|r| r.total()).collect()
}

fn cmd_report(family: &str, n: usize, p_min: i64) -> Result<Output, CliError> {
    let (p, cusp, odp) = match family.to_ascii_lowercase().as_str() {
        "fermat" if n >= 2 => (presets::fermat(n), presets::cusp(n), presets::odp(n)),
        "doublecover" | "double-cover" if n >= 2 => {
            (presets::double_cover(n), presets::cusp_double(n), presets::odp_double(n))
        }
        _ => return Err(CliError::Input(format!("report needs fermat or doublecover with n >= 2, got {family} {n}"))),
    };
    let t_max = hochschild::default_t_max(n);
    let hh = compute_hh(&p, t_max, Mode::Both)?;
    let basis = unfolding::unfolding_basis(&p).map_err(input)?;
    let strata = load_strata(family, Some(n))?;
    let n_max = t_max as i64;
    let ss = compute_specseq(&strata, p_min.min(-(n_max + 2)), n_max)?;
    let alg = mirror_algebra(family, Some(n))?;
    let ahh = trivext::hochschild_algebra(&alg, 1, 0).map_err(input)?;
    let cert = specseq::formality_obstruction_report(&ss.bounds, &ahh);
    let cusp_dims = ungraded_dims(&hochschild::hh_mf(&cusp, t_max, false)?);
    let odp_dims = ungraded_dims(&hochschild::hh_mf(&odp, t_max, false)?);
    let cusp_ok = specseq::consistent_with_bounds(&ss.bounds, &cusp_dims);
    let odp_ok = specseq::consistent_with_bounds(&ss.bounds, &odp_dims);

    let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    let mut t = String::new();
    writeln!(t, "== {} ==", p.name).unwrap();
    writeln!(t, "{hh}").unwrap();
    writeln!(t, "deformation dimension: {}", hochschild::deformation_dimension(&hh)).unwrap();
    writeln!(t, "unfolding weights: {:?}", basis.weights()).unwrap();
    writeln!(t, "\n== spectral sequence ==").unwrap();
    t.push_str(&bounds_text(&ss.bounds));
    writeln!(t, "\n== mirror algebra (dim {}) ==", alg.dim()).unwrap();
    writeln!(t, "HH^1(A)_0 = {}", cert.hh1_weight0).unwrap();
    let verdict = match cert.verdict {
        specseq::FormalityVerdict::NonFormal => "NON-FORMAL",
        specseq::FormalityVerdict::Inconclusive => "INCONCLUSIVE",
    };
    writeln!(t, "certificate: {verdict} (SH^1 in [{}, {}])", cert.sh1.0, cert.sh1.1).unwrap();
    writeln!(t, "\n== mirror selection ==").unwrap();
    writeln!(t, "{}: HH = [{}] {}", cusp.name, list(&cusp_dims), if cusp_ok { "fits" } else { "does not fit" }).unwrap();
    writeln!(t, "{}: HH = [{}] {}", odp.name, list(&odp_dims), if odp_ok { "fits" } else { "does not fit" }).unwrap();
    let json = json!({
        "name": p.name,
        "hh": hh_json(&hh),
        "unfolding_weights": basis.weights(),
        "bounds": ss.bounds,
        "algebra_dim": alg.dim(),
        "certificate": cert,
        "mirror_selection": [
            {"name": cusp.name, "dims": cusp_dims, "fits": cusp_ok},
            {"name": odp.name, "dims": odp_dims, "fits": odp_ok},
        ],
    });
    Ok(Output { text: t, json })
}
