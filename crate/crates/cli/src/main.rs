use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use chordal_sdp::bench::{fit_affine, measure, theta_ktree_instance, BenchRow, CSV_HEADER};
use chordal_sdp::convert::{analyze_instance, chordal_convert_solve, write_u, ConvertOptions, OrderingSource};
use chordal_sdp::graph::{parse_graph_spec, Permutation};
use chordal_sdp::ipm::{IpmOptions, StepMode};
use chordal_sdp::model::{
    gen_acopf_like, gen_lovasz_theta, gen_max_k_cut, random_diagonal_sdp, random_poly_opt, random_sensor_network,
    read_problem_file, write_problem_file, SdpProblem,
};
use chordal_sdp::Error;

const EXIT_PARSE: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(name = "chordal-sdp", version, about = "Sparse SDP solver by chordal conversion")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file (.dat-s or .json).
    Solve(SolveArgs),
    /// Report clique sizes and fill statistics without solving.
    Analyze(AnalyzeArgs),
    /// Write a random instance of a problem family.
    Generate(GenerateArgs),
    /// Run a size sweep and fit per-iteration time against m + n.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct SolverFlags {
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, default_value = "adaptive")]
    mode: StepMode,
    /// amd, natural, file:PATH, or ktree (reads `<input>.order`).
    #[arg(long, default_value = "amd")]
    ordering: String,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl SolverFlags {
    fn ipm(&self) -> IpmOptions {
        IpmOptions { eps: self.eps, mode: self.mode, max_iter: Some(self.max_iter), ..Default::default() }
    }
}

#[derive(Args)]
struct SolveArgs {
    input: PathBuf,
    #[command(flatten)]
    flags: SolverFlags,
    /// Result JSON path; defaults to `<input>.result.json`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the factor `U`.
    #[arg(long)]
    u_out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    #[arg(long, default_value = "amd")]
    ordering: String,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Diag,
    Maxcut,
    Theta,
    Snl,
    Poly,
    Acopf,
}

#[derive(Args)]
struct GenerateArgs {
    family: Family,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Graph spec such as `cycle:10` or `ktree:5:200:1.5`.
    #[arg(long)]
    graph: Option<String>,
    /// Number of colours for maxcut; sensors' dimension for snl.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Width of the random partial k-tree for theta.
    #[arg(long)]
    ktree: Option<usize>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 1.5)]
    ratio: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Only `theta` is supported as a sweep family.
    #[arg(long, default_value = "theta")]
    family: String,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800,1600,3200")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1.5)]
    ratio: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    flags: SolverFlags,
    /// JSON summary path.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Whitespace-separated `m+n periter_s` columns for plotting.
    #[arg(long)]
    data: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHORDAL_SDP_LOG", "error"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Solve(a) => cmd_solve(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

struct Failure {
    code: u8,
    msg: String,
}

fn parse_failure(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_PARSE, msg: e.to_string() }
}

fn solver_failure(e: Error) -> Failure {
    let code = if matches!(e, Error::Infeasible(_)) { EXIT_INFEASIBLE } else { EXIT_SOLVER };
    Failure { code, msg: e.to_string() }
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure { code: 1, msg: e.to_string() }
}

fn load(path: &Path) -> Result<SdpProblem, Failure> {
    read_problem_file(path).map_err(|e| parse_failure(format!("{}: {e}", path.display())))
}

fn order_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".order");
    PathBuf::from(s)
}

/// Elimination order file: 1-based vertices separated by whitespace; `#`
/// starts a comment.
fn read_order(path: &Path) -> Result<Permutation, Failure> {
    let f = File::open(path).map_err(|e| parse_failure(format!("{}: {e}", path.display())))?;
    let mut order = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(parse_failure)?;
        let body = line.split('#').next().unwrap_or("");
        for t in body.split_whitespace() {
            order.push(t.parse::<usize>().map_err(|_| parse_failure(format!("bad vertex '{t}' in {}", path.display())))?);
        }
    }
    Permutation::from_order(&order).map_err(parse_failure)
}

fn write_order(path: &Path, p: &Permutation) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path).map_err(io_failure)?);
    writeln!(w, "# elimination order, 1-based").map_err(io_failure)?;
    let line: Vec<String> = p.elimination_order().iter().map(|v| v.to_string()).collect();
    writeln!(w, "{}", line.join(" ")).map_err(io_failure)?;
    w.flush().map_err(io_failure)
}

fn ordering_source(spec: &str, input: &Path) -> Result<OrderingSource, Failure> {
    match spec {
        "amd" => Ok(OrderingSource::AmdExtended),
        "natural" => Ok(OrderingSource::Natural),
        "ktree" => Ok(OrderingSource::Supplied(read_order(&order_sidecar(input))?)),
        s => match s.strip_prefix("file:") {
            Some(p) => Ok(OrderingSource::Supplied(read_order(Path::new(p))?)),
            None => Err(parse_failure(format!("unknown ordering '{s}'"))),
        },
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().map_err(io_failure)
}

fn cmd_solve(a: SolveArgs) -> Result<(), Failure> {
    let problem = load(&a.input)?;
    let ordering = ordering_source(&a.flags.ordering, &a.input)?;
    log::info!("{}: n={} m={}, ordering {}", a.input.display(), problem.n, problem.m(), ordering.label());
    let opts = ConvertOptions { ordering, ipm: a.flags.ipm() };
    let sol = pool(a.flags.threads)?.install(|| chordal_convert_solve(&problem, &opts)).map_err(solver_failure)?;

    let report = a.report.unwrap_or_else(|| {
        let mut s = a.input.as_os_str().to_owned();
        s.push(".result.json");
        PathBuf::from(s)
    });
    let mut w = BufWriter::new(File::create(&report).map_err(io_failure)?);
    serde_json::to_writer_pretty(&mut w, &sol.result_json(&problem)).map_err(io_failure)?;
    writeln!(w).map_err(io_failure)?;
    w.flush().map_err(io_failure)?;
    log::info!("wrote {}", report.display());
    if let Some(p) = &a.u_out {
        write_u(BufWriter::new(File::create(p).map_err(io_failure)?), &sol.u).map_err(io_failure)?;
    }

    let family = a.input.file_stem().and_then(|s| s.to_str()).unwrap_or("problem");
    let row = BenchRow {
        family: family.to_string(),
        n: problem.n,
        m: problem.m(),
        omega: sol.omega,
        omega_bar: sol.omega_bar,
        iters: sol.iterations,
        digits: sol.digits.min,
        prep_s: sol.timings.prep_s,
        periter_s: sol.timings.periter_s,
        post_s: sol.timings.post_s,
        zero_fill: sol.schur_fill == 0,
        schur_fill: sol.schur_fill,
        error: None,
    };
    println!("{CSV_HEADER}");
    println!("{}", row.csv_line());
    println!("objective {:.10e} status {:?}", sol.objective_primal(&problem), sol.status);
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let problem = load(&a.input)?;
    let perm = ordering_source(&a.ordering, &a.input)?.resolve(&problem).map_err(parse_failure)?;
    let r = analyze_instance(&problem, &perm).map_err(solver_failure)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&r).map_err(io_failure)?);
        return Ok(());
    }
    println!("n: {}", r.n);
    println!("m: {}", r.m);
    println!("omega: {}", r.omega);
    println!("omega_bar: {}", r.omega_bar);
    println!("omega_schur: {} (bounds {}..{})", r.omega_schur, r.lower_bound, r.upper_bound);
    println!("E==Ebar: {}, zero-fill: {}", r.e_equals_ebar, r.zero_fill);
    println!("nnz_L: {}", r.nnz_l);
    println!("nnz_schur: {}", r.nnz_schur);
    println!("|F|: {}", r.f_len);
    println!("orthant: {}", r.orthant_dim);
    let largest = r.psd_cone_sizes.iter().max().copied().unwrap_or(0);
    println!("psd cones: {} (largest {largest})", r.psd_cone_sizes.len());
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let graph = |default: &str| parse_graph_spec(a.graph.as_deref().unwrap_or(default), a.seed).map_err(parse_failure);
    let mut order = None;
    let problem = match a.family {
        Family::Diag => random_diagonal_sdp(a.n, a.m, a.seed),
        Family::Maxcut => gen_max_k_cut(&graph(&format!("cycle:{}", a.n))?, None, a.k),
        Family::Theta => match a.ktree {
            Some(k) => theta_ktree_instance(k, a.n, a.ratio, a.seed).map(|(p, perm)| {
                order = Some(perm);
                p
            }),
            None => gen_lovasz_theta(&graph(&format!("cycle:{}", a.n))?),
        },
        Family::Snl => random_sensor_network(a.n, a.m, a.k, 0.6, a.seed),
        Family::Poly => random_poly_opt(a.n, a.k, a.seed),
        Family::Acopf => gen_acopf_like(&graph(&format!("star:{}", a.n))?, a.seed),
    }
    .map_err(parse_failure)?;
    write_problem_file(&a.out, &problem).map_err(io_failure)?;
    if let Some(p) = order {
        write_order(&order_sidecar(&a.out), &p)?;
    }
    println!("wrote {} (n={}, m={})", a.out.display(), problem.n, problem.m());
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    if a.family != "theta" {
        return Err(parse_failure(format!("unsupported bench family '{}'", a.family)));
    }
    let ipm = a.flags.ipm();
    let rows: Vec<BenchRow> = pool(a.flags.threads)?.install(|| {
        a.sizes
            .par_iter()
            .map(|&d| match theta_ktree_instance(a.k, d, a.ratio, a.seed) {
                Ok((p, perm)) => {
                    let ordering = match a.flags.ordering.as_str() {
                        "natural" => OrderingSource::Natural,
                        "amd" => OrderingSource::AmdExtended,
                        _ => OrderingSource::Supplied(perm),
                    };
                    measure("theta", &p, ordering, &ipm)
                }
                Err(e) => BenchRow {
                    family: "theta".into(),
                    n: d + 1,
                    m: 0,
                    omega: 0,
                    omega_bar: 0,
                    iters: 0,
                    digits: 0.0,
                    prep_s: 0.0,
                    periter_s: 0.0,
                    post_s: 0.0,
                    zero_fill: false,
                    schur_fill: 0,
                    error: Some(e.to_string()),
                },
            })
            .collect()
    });

    let ok: Vec<&BenchRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let xs: Vec<f64> = ok.iter().map(|r| (r.m + r.n) as f64).collect();
    let ys: Vec<f64> = ok.iter().map(|r| r.periter_s).collect();
    let fit = (ok.len() >= 2).then(|| fit_affine(&xs, &ys));

    let mut csv = String::new();
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    print!("{csv}");
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("n={}: {}", r.n, r.error.as_deref().unwrap_or(""));
    }
    if let Some(f) = fit {
        println!("fit periter_s = {:.3e}*(m+n) + {:.3e}, R^2 = {:.4}", f.slope, f.intercept, f.r2);
    }
    if let Some(p) = &a.csv {
        std::fs::write(p, &csv).map_err(io_failure)?;
    }
    if let Some(p) = &a.data {
        let mut s = String::from("# m+n periter_s\n");
        for (x, y) in xs.iter().zip(&ys) {
            s.push_str(&format!("{x} {y}\n"));
        }
        std::fs::write(p, s).map_err(io_failure)?;
    }
    if let Some(p) = &a.report {
        let j = serde_json::json!({ "rows": rows, "fit": fit });
        std::fs::write(p, serde_json::to_string_pretty(&j).map_err(io_failure)?).map_err(io_failure)?;
    }
    Ok(())
}
