//! Command-line front end for `powops-core`.
//!
//! [`run`] parses an argument vector, dispatches one verb and returns the
//! exit code with the captured output, so the binary and the tests share
//! one code path.
//!
//! Exit codes: `0` success, `1` input error, `2` rewrite budget exhausted.
//!
//! Machine-readable output (`--json`) uses these documents, with fields in
//! the order shown:
//!
//! * expressions: `{prime, side, terms: [{coefficient, word: [[bockstein, index], ...]}]}`
//! * algebra elements: `{prime, generators: [{name, degree}], terms: [{coefficient, monomial}]}`
//! * enumerations: `{basis: [...], count}`, words as letter arrays and monomials as text
//! * structure maps: `{source: {basis, count}, target: {basis, count}, images, missed, surjective}`
//! * charts: `{rows: [{q, dims}], legend: {s_min, s_max, truncate_at, diagonals: [{degree, total}], notes}}`

use std::fmt::Write as _;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use powops_core::adem::DEFAULT_STEP_BUDGET;
use powops_core::equivariant::{gamma_fixed_dim, in_family_t, orbits};
use powops_core::{
    completion_basis, double_coset_check, free_basis, gcd_binomials, milnor_dim, op_pattern, parse, parse_element_with,
    steenrod_basis, steenrodize_with, structure_map, suspension_image, tate_chart, weyl_group, Action, AdemError,
    AlgebraElement, EquivariantError, FreeError, GeneratorSet, LinComb, OpWord, ParseError, Permutation, Prime,
    Reducer, Side, Strategy, Subgroup, WindowSpec,
};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "powops", version, about = "Dyer-Lashof and Steenrod operation algebra")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Args)]
struct Common {
    /// The prime.
    #[arg(short = 'p', long = "prime", default_value_t = 2)]
    prime: u64,
    /// Emit a machine-readable document.
    #[arg(long)]
    json: bool,
    /// Rewrite steps allowed per input term.
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    step_budget: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    A,
    B,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Leftmost,
    Rightmost,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Reduce an expression to admissible normal form.
    Reduce {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "b", ignore_case = true)]
        side: SideArg,
        #[arg(long, value_enum, default_value = "leftmost")]
        strategy: StrategyArg,
        expr: String,
    },
    /// Free-algebra basis on `--generators`, or the Steenrod basis with `--steenrod`.
    Basis {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        degree: i64,
        #[arg(long, default_value_t = 2)]
        length_cap: usize,
        /// Generators as `name:degree` pairs separated by commas.
        #[arg(long, allow_hyphen_values = true)]
        generators: Option<String>,
        #[arg(long, conflicts_with = "generators")]
        steenrod: bool,
    },
    /// Enumerate a completion window, or the map to a shallower window.
    Completion {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        degree: i64,
        #[arg(long, allow_hyphen_values = true)]
        excess_floor: i64,
        #[arg(long, default_value_t = 1)]
        length_cap: usize,
        /// Report the structure map to the window with this floor.
        #[arg(long, allow_hyphen_values = true)]
        target_floor: Option<i64>,
    },
    /// Send a generalized expression to the Steenrod algebra.
    Steenrodize {
        #[command(flatten)]
        common: Common,
        expr: String,
    },
    /// Apply an operation to an element of the free algebra.
    Act {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        generators: String,
        /// Operation to apply; the element is printed unchanged when absent.
        #[arg(long, allow_hyphen_values = true)]
        op: Option<String>,
        /// Apply the suspension map after the operation.
        #[arg(long)]
        suspend: bool,
        element: String,
    },
    /// Orbits and family membership of a permutation subgroup, or binomial gcds.
    Family {
        #[command(flatten)]
        common: Common,
        #[arg(short = 'n', long)]
        n: Option<usize>,
        /// Subgroup generator in cycle notation; repeatable.
        #[arg(long = "perm")]
        perms: Vec<String>,
        #[arg(long)]
        gcd_binomials: Option<u64>,
    },
    /// Weyl group of a subgroup of the symmetric group (default the cyclic group).
    Weyl {
        #[command(flatten)]
        common: Common,
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(long = "perm")]
        perms: Vec<String>,
    },
    /// Double coset scan for the cyclic subgroup of the symmetric group on p letters.
    Doublecoset {
        #[command(flatten)]
        common: Common,
    },
    /// Dimension of degree-k weight-p operations.
    Oppattern {
        #[command(flatten)]
        common: Common,
        #[arg(short = 'k', allow_hyphen_values = true)]
        k: i64,
    },
    /// The p = 2 Tate chart.
    Tatechart {
        #[command(flatten)]
        common: Common,
        /// Coefficient dimensions as `q:dim` pairs separated by commas.
        #[arg(long, default_value = "0:1", allow_hyphen_values = true)]
        coefficients: String,
        #[arg(long, default_value_t = -3, allow_hyphen_values = true)]
        s_min: i64,
        #[arg(long, default_value_t = 3, allow_hyphen_values = true)]
        s_max: i64,
        #[arg(long, allow_hyphen_values = true)]
        truncate: Option<i64>,
    },
}

/// Exit code and captured streams of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Input(String),
    Budget(String),
}

impl Failure {
    fn with_caret(input: &str, e: &ParseError) -> Failure {
        let column = input[..e.position.min(input.len())].chars().count();
        Failure::Input(format!("error: {}\n  {input}\n  {}^", e.message, " ".repeat(column)))
    }
}

fn adem_failure(e: AdemError) -> Failure {
    match e {
        AdemError::BudgetExhausted { .. } => Failure::Budget(format!("error: {e}")),
        e => Failure::Input(format!("error: {e}")),
    }
}

fn free_failure(input: &str, e: FreeError) -> Failure {
    match e {
        FreeError::Parse(p) => Failure::with_caret(input, &p),
        FreeError::Adem(a) => adem_failure(a),
        e => Failure::Input(format!("error: {e}")),
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(format!("error: {e}"))
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: 1, stdout: String::new(), stderr: text }
            } else {
                Outcome { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    match dispatch(cli.verb) {
        Ok(mut stdout) => {
            if !stdout.ends_with('\n') {
                stdout.push('\n');
            }
            Outcome { code: 0, stdout, stderr: String::new() }
        }
        Err(Failure::Input(m)) => Outcome { code: 1, stdout: String::new(), stderr: m + "\n" },
        Err(Failure::Budget(m)) => Outcome { code: 2, stdout: String::new(), stderr: m + "\n" },
    }
}

#[derive(Serialize)]
struct TermDoc {
    coefficient: u32,
    word: Vec<[i64; 2]>,
}

#[derive(Serialize)]
struct ExprDoc {
    prime: u32,
    side: String,
    terms: Vec<TermDoc>,
}

#[derive(Serialize)]
struct GeneratorDoc {
    name: String,
    degree: i64,
}

#[derive(Serialize)]
struct MonomialTermDoc {
    coefficient: u32,
    monomial: String,
}

#[derive(Serialize)]
struct ElementDoc {
    prime: u32,
    generators: Vec<GeneratorDoc>,
    terms: Vec<MonomialTermDoc>,
}

#[derive(Serialize)]
struct BasisDoc<T: Serialize> {
    basis: Vec<T>,
    count: usize,
}

#[derive(Serialize)]
struct StructureDoc {
    source: BasisDoc<Vec<[i64; 2]>>,
    target: BasisDoc<Vec<[i64; 2]>>,
    images: Vec<Option<usize>>,
    missed: Vec<usize>,
    surjective: bool,
}

#[derive(Serialize)]
struct RowDoc {
    q: i64,
    dims: Vec<u64>,
}

#[derive(Serialize)]
struct DiagonalDoc {
    degree: i64,
    total: u64,
}

#[derive(Serialize)]
struct LegendDoc {
    s_min: i64,
    s_max: i64,
    truncate_at: Option<i64>,
    diagonals: Vec<DiagonalDoc>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct ChartDoc {
    rows: Vec<RowDoc>,
    legend: LegendDoc,
}

#[derive(Serialize)]
struct FamilyDoc {
    n: usize,
    order: usize,
    orbits: Vec<Vec<usize>>,
    gamma_fixed_dim: usize,
    in_family_t: bool,
}

#[derive(Serialize)]
struct GcdDoc {
    n: u64,
    gcd: u128,
}

#[derive(Serialize)]
struct WeylDoc {
    n: usize,
    subgroup_order: usize,
    normalizer_order: usize,
    order: usize,
    representatives: Vec<String>,
}

#[derive(Serialize)]
struct DoubleCosetDoc {
    prime: u32,
    group_order: usize,
    normalizer_order: usize,
    outside_normalizer: usize,
    double_cosets: usize,
    holds: bool,
}

#[derive(Serialize)]
struct PatternDoc {
    prime: u32,
    k: i64,
    dimension: u32,
}

fn to_json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string(doc).expect("documents serialize")
}

fn word_doc(w: &OpWord) -> Vec<[i64; 2]> {
    w.letters().iter().map(|l| [l.bockstein as i64, l.index]).collect()
}

fn expr_doc(x: &LinComb) -> ExprDoc {
    ExprDoc {
        prime: x.prime().get(),
        side: x.side().to_string(),
        terms: x.iter().map(|(w, c)| TermDoc { coefficient: c.residue(), word: word_doc(w) }).collect(),
    }
}

fn element_doc(x: &AlgebraElement) -> ElementDoc {
    let gens = x.generators();
    ElementDoc {
        prime: x.prime().get(),
        generators: gens.iter().map(|(n, d)| GeneratorDoc { name: n.to_string(), degree: d }).collect(),
        terms: x
            .iter()
            .map(|(m, c)| MonomialTermDoc { coefficient: c.residue(), monomial: m.to_text(x.prime(), gens) })
            .collect(),
    }
}

fn prime(common: &Common) -> Result<Prime, Failure> {
    Prime::new(common.prime).map_err(input)
}

fn parse_expr(text: &str, p: Prime, side: Side) -> Result<LinComb, Failure> {
    parse(text, p, side).map_err(|e| Failure::with_caret(text, &e))
}

fn parse_generators(text: &str) -> Result<Arc<GeneratorSet>, Failure> {
    let mut gens = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, degree) = item
            .split_once(':')
            .ok_or_else(|| Failure::Input(format!("error: generator `{item}` is not of the form name:degree")))?;
        let degree: i64 = degree
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("error: generator `{item}` has a malformed degree")))?;
        gens.push((name.trim().to_string(), degree));
    }
    Ok(GeneratorSet::new(gens).map_err(input)?.into_shared())
}

fn parse_pairs(text: &str) -> Result<Vec<(i64, u64)>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let bad = || Failure::Input(format!("error: coefficient `{item}` is not of the form q:dim"));
            let (q, d) = item.split_once(':').ok_or_else(bad)?;
            Ok((q.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

fn subgroup(n: usize, perms: &[String]) -> Result<Subgroup, Failure> {
    let gens = perms.iter().map(|t| Permutation::parse_cycles(n, t)).collect::<Result<Vec<_>, EquivariantError>>();
    Subgroup::generated(n, &gens.map_err(input)?).map_err(input)
}

fn reducer(common: &Common) -> Reducer {
    Reducer::new().with_step_budget(common.step_budget)
}

fn words_text(words: &[OpWord]) -> String {
    let mut out = String::new();
    for w in words {
        let _ = writeln!(out, "{w}");
    }
    let _ = write!(out, "count: {}", words.len());
    out
}

fn dispatch(verb: Verb) -> Result<String, Failure> {
    match verb {
        Verb::Reduce { common, side, strategy, expr } => {
            let p = prime(&common)?;
            let side = match side {
                SideArg::A => Side::A,
                SideArg::B => Side::B,
            };
            let strategy = match strategy {
                StrategyArg::Leftmost => Strategy::Leftmost,
                StrategyArg::Rightmost => Strategy::Rightmost,
            };
            let x = parse_expr(&expr, p, side)?;
            let y = reducer(&common).with_strategy(strategy).reduce(&x).map_err(adem_failure)?;
            Ok(if common.json { to_json(&expr_doc(&y)) } else { y.to_string() })
        }
        Verb::Basis { common, degree, length_cap, generators, steenrod } => {
            let p = prime(&common)?;
            if steenrod || generators.is_none() {
                if degree < 0 {
                    return Err(Failure::Input(format!("error: Steenrod degree {degree} is negative")));
                }
                let basis = steenrod_basis(degree, p);
                if common.json {
                    let docs = basis.iter().map(word_doc).collect::<Vec<_>>();
                    return Ok(to_json(&BasisDoc { count: docs.len(), basis: docs }));
                }
                let mut out = words_text(&basis);
                if p.is_two() {
                    let _ = write!(out, "\nmilnor_dim: {}", milnor_dim(degree as u64));
                }
                return Ok(out);
            }
            let gens = parse_generators(generators.as_deref().unwrap_or_default())?;
            let basis = free_basis(p, &gens, degree, length_cap).map_err(input)?;
            let text: Vec<String> = basis.iter().map(|m| m.to_text(p, &gens)).collect();
            if common.json {
                return Ok(to_json(&BasisDoc { count: text.len(), basis: text }));
            }
            let mut out = String::new();
            for t in &text {
                let _ = writeln!(out, "{t}");
            }
            let _ = write!(out, "count: {}", text.len());
            Ok(out)
        }
        Verb::Completion { common, degree, excess_floor, length_cap, target_floor } => {
            let p = prime(&common)?;
            let source = WindowSpec::new(degree, excess_floor, length_cap).map_err(input)?;
            let Some(floor) = target_floor else {
                let basis = completion_basis(&source, p);
                if common.json {
                    let docs = basis.iter().map(word_doc).collect::<Vec<_>>();
                    return Ok(to_json(&BasisDoc { count: docs.len(), basis: docs }));
                }
                return Ok(words_text(&basis));
            };
            let target = WindowSpec::new(degree, floor, length_cap).map_err(input)?;
            let m = structure_map(&source, &target, p).map_err(input)?;
            if common.json {
                let side = |b: &[OpWord]| BasisDoc { basis: b.iter().map(word_doc).collect(), count: b.len() };
                return Ok(to_json(&StructureDoc {
                    source: side(&m.source_basis),
                    target: side(&m.target_basis),
                    images: m.images.clone(),
                    missed: m.missed.clone(),
                    surjective: m.is_surjective(),
                }));
            }
            let mut out = String::new();
            for (w, image) in m.source_basis.iter().zip(&m.images) {
                match image {
                    Some(j) => writeln!(out, "{w} -> {}", m.target_basis[*j]),
                    None => writeln!(out, "{w} -> 0"),
                }
                .unwrap();
            }
            let _ = write!(
                out,
                "source: {}, target: {}, surjective: {}",
                m.source_basis.len(),
                m.target_basis.len(),
                m.is_surjective()
            );
            Ok(out)
        }
        Verb::Steenrodize { common, expr } => {
            let p = prime(&common)?;
            let x = parse_expr(&expr, p, Side::B)?;
            let y = steenrodize_with(&mut reducer(&common), &x).map_err(adem_failure)?;
            Ok(if common.json { to_json(&expr_doc(&y)) } else { y.to_string() })
        }
        Verb::Act { common, generators, op, suspend, element } => {
            let p = prime(&common)?;
            let gens = parse_generators(&generators)?;
            let mut action = Action::new(p, gens).with_reducer(reducer(&common));
            let mut x = parse_element_with(&mut action, &element).map_err(|e| free_failure(&element, e))?;
            if let Some(op) = op {
                let o = parse_expr(&op, p, Side::B)?;
                x = action.apply(&o, &x).map_err(|e| free_failure(&op, e))?;
            }
            if suspend {
                x = suspension_image(&x).map_err(input)?;
            }
            Ok(if common.json { to_json(&element_doc(&x)) } else { x.to_string() })
        }
        Verb::Family { common, n, perms, gcd_binomials: g } => {
            if let Some(m) = g {
                let gcd = gcd_binomials(m).map_err(input)?;
                return Ok(if common.json { to_json(&GcdDoc { n: m, gcd }) } else { gcd.to_string() });
            }
            let n = n.ok_or_else(|| Failure::Input(String::from("error: give -n with --perm, or --gcd-binomials")))?;
            let h = subgroup(n, &perms)?;
            let doc = FamilyDoc {
                n,
                order: h.order(),
                orbits: orbits(&h),
                gamma_fixed_dim: gamma_fixed_dim(&h),
                in_family_t: in_family_t(&h),
            };
            if common.json {
                return Ok(to_json(&doc));
            }
            let blocks: Vec<String> = doc
                .orbits
                .iter()
                .map(|o| format!("{{{}}}", o.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")))
                .collect();
            Ok(format!(
                "order: {}\norbits: {}\ngamma_fixed_dim: {}\nin_family_t: {}",
                doc.order,
                blocks.join(" "),
                doc.gamma_fixed_dim,
                doc.in_family_t
            ))
        }
        Verb::Weyl { common, n, perms } => {
            let h = if perms.is_empty() { Subgroup::cyclic(n).map_err(input)? } else { subgroup(n, &perms)? };
            let w = weyl_group(&h).map_err(input)?;
            let doc = WeylDoc {
                n,
                subgroup_order: h.order(),
                normalizer_order: w.normalizer_order,
                order: w.order,
                representatives: w.representatives.iter().map(|r| r.to_string()).collect(),
            };
            if common.json {
                return Ok(to_json(&doc));
            }
            Ok(format!(
                "order: {}\nnormalizer_order: {}\nsubgroup_order: {}\nrepresentatives: {}",
                doc.order,
                doc.normalizer_order,
                doc.subgroup_order,
                doc.representatives.join(" ")
            ))
        }
        Verb::Doublecoset { common } => {
            let p = prime(&common)?;
            let r = double_coset_check(p).map_err(input)?;
            let doc = DoubleCosetDoc {
                prime: p.get(),
                group_order: r.group_order,
                normalizer_order: r.normalizer_order,
                outside_normalizer: r.outside_normalizer,
                double_cosets: r.double_cosets,
                holds: true,
            };
            if common.json {
                return Ok(to_json(&doc));
            }
            Ok(format!(
                "holds: true\ngroup_order: {}\nnormalizer_order: {}\noutside_normalizer: {}\ndouble_cosets: {}",
                doc.group_order, doc.normalizer_order, doc.outside_normalizer, doc.double_cosets
            ))
        }
        Verb::Oppattern { common, k } => {
            let p = prime(&common)?;
            let d = op_pattern(p, k);
            Ok(if common.json { to_json(&PatternDoc { prime: p.get(), k, dimension: d }) } else { d.to_string() })
        }
        Verb::Tatechart { common, coefficients, s_min, s_max, truncate } => {
            let p = prime(&common)?;
            let chart = tate_chart(p, &parse_pairs(&coefficients)?, (s_min, s_max), truncate).map_err(input)?;
            if common.json {
                return Ok(to_json(&ChartDoc {
                    rows: chart.rows.iter().map(|r| RowDoc { q: r.q, dims: r.dims.clone() }).collect(),
                    legend: LegendDoc {
                        s_min: chart.s_min,
                        s_max: chart.s_max,
                        truncate_at: chart.truncate_at,
                        diagonals: chart.diagonals.iter().map(|&(degree, total)| DiagonalDoc { degree, total }).collect(),
                        notes: chart.legend(),
                    },
                }));
            }
            let width = (s_min..=s_max).map(|s| s.to_string().len()).max().unwrap_or(1).max(3);
            let mut out = String::new();
            let _ = write!(out, "{:>5} |", "q\\s");
            for s in s_min..=s_max {
                let _ = write!(out, " {s:>width$}");
            }
            out.push('\n');
            for r in chart.rows.iter().rev() {
                let _ = write!(out, "{:>5} |", r.q);
                for d in &r.dims {
                    let cell = if *d == 0 { String::from(".") } else { d.to_string() };
                    let _ = write!(out, " {cell:>width$}");
                }
                out.push('\n');
            }
            let totals: Vec<String> = chart.diagonals.iter().map(|(n, t)| format!("{n}:{t}")).collect();
            let _ = writeln!(out, "diagonal totals: {}", totals.join(" "));
            for note in chart.legend() {
                let _ = writeln!(out, "# {note}");
            }
            Ok(out)
        }
    }
}
