use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use polyeval::bench::{run_grid, write_csv, BenchError, BenchRecord, BenchSpec, Degrees};
use polyeval::{
    build_multivariate, compile, parse_point, parse_polynomial, DomainTag, EvaluationTree, FloatDomain,
    FunctionScheme, IntegerDomain, IntervalDomain, Literal, Polynomial, RingDomain,
};

#[derive(Parser)]
#[command(name = "polyeval", version, about = "Compile and evaluate polynomials with evaluation trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the evaluation tree of a polynomial and report on it.
    Compile(CompileArgs),
    /// Evaluate a polynomial at a point.
    Eval(EvalArgs),
    /// Time schemes on random dense polynomials and write a CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct TreeArgs {
    /// Polynomial, e.g. "3*x^2-y+1".
    #[arg(allow_hyphen_values = true)]
    poly: String,
    /// One scheme for all variables, or a comma list with one per variable.
    /// Names: direct, horner, estrin, balanced, or upper:lower@N.
    #[arg(long, default_value = "balanced")]
    scheme: String,
    /// Variable order, e.g. "x,y". Defaults to order of first appearance.
    #[arg(long)]
    var_order: Option<String>,
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    tree: TreeArgs,
    /// Write the tree in Graphviz DOT format.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Print node count, degrees, lazy height and exponent counts.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    tree: TreeArgs,
    /// int, float or interval.
    #[arg(long, default_value = "int")]
    domain: String,
    /// Bindings such as "x=2,y=[1.5,2]".
    #[arg(long, default_value = "")]
    at: String,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "balanced")]
    schemes: String,
    /// start:stop:step, a comma list, or a single degree.
    #[arg(long, default_value = "255:257:1")]
    degrees: String,
    #[arg(long, default_value_t = 2048)]
    coeff_bits: u32,
    #[arg(long, default_value_t = 2048)]
    point_bits: u32,
    /// Comma list of worker counts.
    #[arg(long, default_value = "1")]
    workers: String,
    #[arg(long, default_value_t = 9)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path; the CSV goes to standard output when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also time tree construction, compilation and power tables.
    #[arg(long)]
    setup_times: bool,
}

/// A failure with its exit code and message.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn parse(message: impl ToString) -> Self {
        Failure { code: 1, message: message.to_string() }
    }

    fn scheme(message: impl ToString) -> Self {
        Failure { code: 2, message: message.to_string() }
    }

    fn binding(message: impl ToString) -> Self {
        Failure { code: 3, message: message.to_string() }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        Failure { code: 4, message: format!("{}: {err}", path.display()) }
    }
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect()
}

fn parse_schemes(text: &str) -> Result<Vec<FunctionScheme>, Failure> {
    let schemes: Vec<FunctionScheme> = split_list(text)
        .into_iter()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(Failure::scheme)?;
    if schemes.is_empty() {
        return Err(Failure::scheme("no scheme given"));
    }
    Ok(schemes)
}

fn load_tree(args: &TreeArgs) -> Result<(Polynomial, EvaluationTree), Failure> {
    let order: Option<Vec<String>> = args.var_order.as_deref().map(|v| split_list(v).into_iter().map(String::from).collect());
    let p = parse_polynomial(&args.poly, order.as_deref()).map_err(Failure::parse)?;
    let mut schemes = parse_schemes(&args.scheme)?;
    let count = p.variables().len();
    if schemes.len() == 1 {
        schemes = vec![schemes[0].clone(); count];
    } else if schemes.len() != count {
        return Err(Failure::scheme(format!(
            "{} schemes given for {count} variables",
            schemes.len()
        )));
    }
    let tree = build_multivariate(&p, &schemes).map_err(Failure::scheme)?;
    Ok((p, tree))
}

fn cmd_compile(args: CompileArgs) -> Result<(), Failure> {
    let (_, tree) = load_tree(&args.tree)?;
    if let Some(path) = &args.dot {
        std::fs::write(path, tree.to_dot()).map_err(|e| Failure::io(path, e))?;
    }
    if args.stats {
        let mut max_degree = 0;
        let mut max_height = 0;
        tree.for_each_tree(&mut |t| {
            max_degree = max_degree.max(t.max_partial_degree());
            max_height = max_height.max(t.max_lazy_height());
        });
        let program = compile(&tree);
        println!("nodes: {}", tree.total_node_count());
        println!("max partial degree: {max_degree}");
        println!("max lazy height: {max_height}");
        for (name, set) in program.variables().iter().zip(program.exponents()) {
            println!("exponents {name}: {}", set.len());
        }
    }
    Ok(())
}

fn evaluate<D: RingDomain>(
    tree: &EvaluationTree,
    domain: D,
    point: &[D::Value],
    workers: usize,
) -> D::Value {
    let program = compile(tree);
    let evaluator = program.prepare(domain);
    let result = if workers > 1 {
        evaluator.evaluate_parallel(point, workers)
    } else {
        evaluator.evaluate(point)
    };
    result.expect("point arity matches the variables")
}

fn cmd_eval(args: EvalArgs) -> Result<(), Failure> {
    let (p, tree) = load_tree(&args.tree)?;
    let tag: DomainTag = args.domain.parse().map_err(Failure::binding)?;
    let assignment = parse_point(&args.at, p.variables(), tag).map_err(Failure::binding)?;
    let literals = assignment.ordered(p.variables()).map_err(Failure::binding)?;
    let workers = args.workers.max(1);
    let mismatch = || Failure::binding("binding does not match the domain");

    let text = match tag {
        DomainTag::Integer => {
            let point = literals
                .iter()
                .map(|l| match l {
                    Literal::Integer(n) => Ok(n.clone()),
                    _ => Err(mismatch()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            evaluate(&tree, IntegerDomain, &point, workers).to_string()
        }
        DomainTag::Float => {
            let point = literals
                .iter()
                .map(|l| match l {
                    Literal::Float(f) => Ok(*f),
                    _ => Err(mismatch()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            format!("{:?}", evaluate(&tree, FloatDomain, &point, workers))
        }
        DomainTag::Interval => {
            let point = literals
                .iter()
                .map(|l| match l {
                    Literal::Interval(i) => Ok(*i),
                    _ => Err(mismatch()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            evaluate(&tree, IntervalDomain, &point, workers).to_string()
        }
    };
    println!("{text}");
    Ok(())
}

fn summarize(degree: u32, records: &[&BenchRecord]) -> String {
    let terms = records.first().map_or(0, |r| r.term_count);
    let parts: Vec<String> = records
        .iter()
        .map(|r| {
            let mut s = format!(
                "{} w={} {:.3?} ({:.4}x)",
                r.scheme,
                r.workers,
                Duration::from_nanos(r.median_ns),
                r.ratio_vs_balanced
            );
            if let Some(setup) = r.setup_ns {
                s.push_str(&format!(" setup {:.3?}", Duration::from_nanos(setup)));
            }
            s
        })
        .collect();
    format!("degree {degree} ({terms} terms): {}", parts.join(", "))
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let schemes = parse_schemes(&args.schemes)?;
    let degrees: Degrees = args.degrees.parse().map_err(Failure::parse)?;
    let workers = split_list(&args.workers)
        .into_iter()
        .map(|w| w.parse::<usize>().map_err(|_| Failure::parse(format!("bad worker count `{w}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = BenchSpec {
        schemes,
        degrees,
        coeff_bits: args.coeff_bits,
        point_bits: args.point_bits,
        workers,
        repetitions: args.reps,
        seed: args.seed,
        measure_setup: args.setup_times,
    };
    spec.validate().map_err(Failure::parse)?;

    // Open the output first so an unwritable path fails before the run.
    let file = match &args.csv {
        Some(path) => Some((path, File::create(path).map_err(|e| Failure::io(path, e))?)),
        None => None,
    };

    let records = run_grid(&spec).map_err(|e| match e {
        BenchError::InvalidSpec(m) => Failure::parse(m),
        mismatch @ BenchError::Mismatch { .. } => Failure::binding(mismatch),
    })?;

    match file {
        Some((path, file)) => {
            write_csv(&records, BufWriter::new(file)).map_err(|e| Failure::io(path, e))?;
            for &degree in spec.degrees.as_slice() {
                let rows: Vec<&BenchRecord> = records.iter().filter(|r| r.degree == degree).collect();
                println!("{}", summarize(degree, &rows));
            }
        }
        None => {
            let stdout = io::stdout().lock();
            write_csv(&records, stdout).map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Compile(args) => cmd_compile(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => {
            let _ = io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
