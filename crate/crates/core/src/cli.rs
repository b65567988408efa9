//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{read_csv, CsvOptions, Dataset, Value};
use crate::error::Error;
use crate::formula::{bind_schema, parse_formula};
use crate::model::{fit, load_model, save_model, CaseRecord, Family, FittedModel};
use crate::plot::{
    layout_case, layout_overall, layout_staircase, render_svg, DisplayOptions, DisplayType, Geometry, PlotScene,
    Style,
};
use crate::predscor::{layout_predscor, term_covariance, CellArea, PredscorOptions};
use crate::terms::{compute_terms, explain_case, print_case_table, print_term_table, Case, PredictionTerms};

pub const STYLE_ENV: &str = "PREDTERMS_STYLE";

#[derive(Parser, Debug)]
#[command(name = "predterms", version, about = "Fit models and explain their predictions term by term")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a linear or logistic model and save it as JSON.
    Fit(FitArgs),
    /// Print the stdev of every prediction term.
    Terms(TermsArgs),
    /// Draw the predictions plot.
    Plot(PlotArgs),
    /// Print (and optionally draw) the prediction terms of one case.
    Explain(ExplainArgs),
    /// Draw the correlation display of the prediction terms.
    Cor(CorArgs),
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Column holding row identifiers.
    #[arg(long = "id-col")]
    pub id_col: Option<String>,
    /// Columns to treat as categorical, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub categorical: Vec<String>,
    #[arg(long, default_value = ",")]
    pub delimiter: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyArg {
    Gaussian,
    Binomial,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub formula: String,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub family: FamilyArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Args, Debug)]
pub struct TermsArgs {
    #[command(flatten)]
    pub input: ModelArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DisplayArg {
    Hist,
    Density,
}

#[derive(Args, Debug)]
pub struct DisplayArgs {
    #[arg(long, value_enum, default_value = "hist")]
    pub display: DisplayArg,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long = "max-terms")]
    pub max_terms: Option<usize>,
    #[arg(long = "full-total-axis")]
    pub full_total_axis: bool,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long, default_value_t = 900.0)]
    pub width: f64,
    #[arg(long, default_value_t = 560.0)]
    pub height: f64,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[command(flatten)]
    pub input: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// 1-based row index, row id, or a JSON object of input values.
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub staircase: bool,
    #[arg(long)]
    pub profile: bool,
    #[command(flatten)]
    pub display: DisplayArgs,
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub input: ModelArgs,
    /// 1-based row index, row id, or a JSON object of input values.
    #[arg(long)]
    pub case: String,
    /// Also draw the case plot to this SVG file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub staircase: bool,
    #[arg(long)]
    pub profile: bool,
    #[command(flatten)]
    pub display: DisplayArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CellAreaArg {
    Variance,
    Stdev,
}

#[derive(Args, Debug)]
pub struct CorArgs {
    #[command(flatten)]
    pub input: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "sort-by-stdev", default_value_t = true, action = clap::ArgAction::Set)]
    pub sort_by_stdev: bool,
    #[arg(long)]
    pub abs: bool,
    #[arg(long = "cell-area", value_enum, default_value = "variance")]
    pub cell_area: CellAreaArg,
    #[arg(long)]
    pub classic: bool,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long, default_value_t = 700.0)]
    pub width: f64,
    #[arg(long, default_value_t = 700.0)]
    pub height: f64,
}

/// Failure of a run: bad invocation (exit 1) or bad data/model (exit 2).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Runs the program on `args` (including the program name) and returns
/// the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Fit(a) => cmd_fit(a, out, err),
        Command::Terms(a) => {
            let (_, _, pt) = load_terms(&a.input, err)?;
            write_out(out, &print_term_table(&pt))
        }
        Command::Plot(a) => cmd_plot(a, err),
        Command::Explain(a) => cmd_explain(a, out, err),
        Command::Cor(a) => cmd_cor(a, out, err),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Data(e.into()))
}

fn read_text(path: &PathBuf, flag: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("--{flag} {}: {e}", path.display())))
}

fn write_file(path: &PathBuf, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Usage(format!("--out {}: {e}", path.display())))
}

fn load_data(args: &DataArgs, model: Option<&FittedModel>) -> CliResult<Dataset> {
    let delimiter = match args.delimiter.as_bytes() {
        [b] => *b,
        _ if args.delimiter == "\\t" => b'\t',
        _ => return Err(CliError::Usage(format!("--delimiter must be one character, got `{}`", args.delimiter))),
    };
    let mut categorical = args.categorical.clone();
    if let Some(m) = model {
        for (c, _) in m.categorical_levels() {
            if !categorical.contains(&c) {
                categorical.push(c);
            }
        }
    }
    let text = read_text(&args.data, "data")?;
    let opts = CsvOptions { delimiter, has_header: true, id_column: args.id_col.clone(), categorical };
    Ok(read_csv(text.as_bytes(), &opts)?)
}

fn load_style() -> CliResult<Style> {
    match std::env::var_os(STYLE_ENV) {
        None => Ok(Style::default()),
        Some(p) => {
            let path = PathBuf::from(p);
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Usage(format!("{STYLE_ENV}={}: {e}", path.display())))?;
            Style::from_json(&text).map_err(|e| CliError::Usage(format!("{STYLE_ENV}: {e}")))
        }
    }
}

fn cmd_fit(a: FitArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let ast = parse_formula(&a.formula).map_err(|e| CliError::Usage(format!("--formula: {e}")))?;
    let ds = load_data(&a.data, None)?;
    let plan = bind_schema(&ast, &ds.schema())?;
    let family = match a.family {
        FamilyArg::Gaussian => Family::Gaussian,
        FamilyArg::Binomial => Family::Binomial,
    };
    let (m, dropped) = fit(&ds, &plan, family)?;
    if dropped > 0 {
        let _ = writeln!(err, "warning: dropped {dropped} row(s) with missing values");
    }
    if !m.diagnostics.converged {
        let _ = writeln!(err, "warning: IRLS did not converge in {} iterations", m.diagnostics.iterations);
    }
    write_file(&a.out, &save_model(&m)?)?;

    // numbers printed exactly as serialized
    let json = |v: f64| serde_json::to_string(&v).unwrap_or_else(|_| v.to_string());
    let mut rows = vec![("(Intercept)".to_string(), json(m.intercept))];
    rows.extend(m.column_descriptors().into_iter().zip(&m.coefficients).map(|(d, &b)| (d.name, json(b))));
    let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let mut text = format!("{} on {} complete cases\n", plan.response.label(), m.diagnostics.n_obs);
    for (name, v) in rows {
        text.push_str(&format!("{name:<w$} {v}\n"));
    }
    write_out(out, &text)
}

/// Model, the complete-case rows of the data with their original row
/// numbers, and the prediction terms on those rows.
struct Loaded {
    model: FittedModel,
    data: Dataset,
    rows: Vec<usize>,
}

fn load_inputs(a: &ModelArgs, err: &mut dyn Write) -> CliResult<Loaded> {
    let model = load_model(&read_text(&a.model, "model")?)?;
    let ds = load_data(&a.data, Some(&model))?;
    // rows missing the response are not training rows either
    let mut needed = model.input_columns();
    if ds.column(&model.response.column).is_some() {
        needed.push(model.response.column.clone());
    }
    let cols = needed.iter().map(|c| ds.require(c)).collect::<crate::Result<Vec<_>>>()?;
    let rows: Vec<usize> = (0..ds.n_rows()).filter(|&r| cols.iter().all(|c| !c.is_missing(r))).collect();
    if rows.is_empty() {
        return Err(Error::NoCompleteCases(needed).into());
    }
    let dropped = ds.n_rows() - rows.len();
    if dropped > 0 {
        let _ = writeln!(err, "warning: dropped {dropped} row(s) with missing values");
    }
    Ok(Loaded { data: ds.select_rows(&rows), model, rows })
}

fn load_terms(a: &ModelArgs, err: &mut dyn Write) -> CliResult<(FittedModel, Dataset, PredictionTerms)> {
    let l = load_inputs(a, err)?;
    let pt = compute_terms(&l.model, &l.data)?;
    Ok((l.model, l.data, pt))
}

/// Values for a supplied case, coerced to the model's column types.
pub fn parse_case_json(text: &str, m: &FittedModel) -> crate::Result<CaseRecord> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let obj = v.as_object().ok_or_else(|| Error::Invalid("case must be a JSON object".into()))?;
    let inputs = m.input_columns();
    let levels = m.categorical_levels();
    let mut rec = CaseRecord::new();
    for (key, val) in obj {
        if !inputs.contains(key) {
            return Err(Error::UnknownColumn(key.clone()));
        }
        if val.is_null() {
            continue;
        }
        let bad = |reason: &str| Error::ColumnType { column: key.clone(), reason: reason.into() };
        let value = match levels.iter().find(|(c, _)| c == key) {
            Some((_, lv)) => {
                let label = match val {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => n.to_string(),
                    serde_json::Value::Bool(b) => crate::data::logical_label(*b).to_string(),
                    _ => return Err(bad("expected a level label")),
                };
                if !lv.contains(&label) {
                    return Err(Error::UnseenLevel { column: key.clone(), level: label });
                }
                Value::Level(label)
            }
            None => match val {
                serde_json::Value::Number(n) => Value::Number(n.as_f64().ok_or_else(|| bad("not a finite number"))?),
                serde_json::Value::String(s) => Value::Number(
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| bad(&format!("expected a number, got `{s}`")))?,
                ),
                _ => return Err(bad("expected a number")),
            },
        };
        rec.insert(key.clone(), value);
    }
    let missing: Vec<String> = inputs.into_iter().filter(|c| !rec.contains_key(c)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingField(missing));
    }
    Ok(rec)
}

enum Selected {
    Row(usize),
    Record(CaseRecord),
}

fn select_case(spec: &str, l: &Loaded) -> CliResult<Selected> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        return Ok(Selected::Record(parse_case_json(spec, &l.model)?));
    }
    let n_original = l.rows.last().map_or(0, |r| r + 1);
    if let Ok(index) = spec.parse::<usize>() {
        if index == 0 {
            return Err(CliError::Usage("--case index is 1-based".into()));
        }
        return match l.rows.iter().position(|&r| r == index - 1) {
            Some(row) => Ok(Selected::Row(row)),
            None if index <= n_original => {
                Err(Error::Invalid(format!("case {index} has missing values in model columns")).into())
            }
            None => Err(Error::CaseIndex { index, n: n_original }.into()),
        };
    }
    match l.data.find_row(spec) {
        Some(row) => Ok(Selected::Row(row)),
        None if l.data.row_ids().is_none() => {
            Err(CliError::Usage(format!("--case `{spec}` is not an index or JSON object, and no --id-col was given")))
        }
        None => Err(Error::Invalid(format!("no row with id `{spec}`")).into()),
    }
}

fn display_options(d: &DisplayArgs) -> DisplayOptions {
    DisplayOptions {
        display: match d.display {
            DisplayArg::Hist => DisplayType::Histogram,
            DisplayArg::Density => DisplayType::Density,
        },
        bandwidth: d.bandwidth,
        max_terms: d.max_terms,
        full_total_axis: d.full_total_axis,
        title: d.title.clone(),
        ..DisplayOptions::default()
    }
}

fn geometry(width: f64, height: f64) -> CliResult<Geometry> {
    let g = Geometry { width, height, ..Geometry::default() };
    if !(width > 0.0 && height > 0.0) {
        return Err(CliError::Usage(format!("--width/--height must be positive, got {width}x{height}")));
    }
    Ok(g)
}

fn check_display(d: &DisplayArgs) -> CliResult<()> {
    if let Some(h) = d.bandwidth {
        if !(h > 0.0 && h.is_finite()) {
            return Err(CliError::Usage(format!("--bandwidth must be positive, got {h}")));
        }
    }
    if d.max_terms == Some(0) {
        return Err(CliError::Usage("--max-terms must be at least 1".into()));
    }
    Ok(())
}

fn case_scene(
    l: &Loaded,
    pt: &PredictionTerms,
    spec: &str,
    staircase: bool,
    profile: bool,
    opts: &DisplayOptions,
) -> CliResult<(crate::terms::CaseExplanation, PlotScene)> {
    let ce = match select_case(spec, l)? {
        Selected::Row(row) => explain_case(&l.model, pt, Case::InSample { data: &l.data, row })?,
        Selected::Record(rec) => explain_case(&l.model, pt, Case::Record(&rec))?,
    };
    let scene = if staircase {
        layout_staircase(&l.model, pt, &ce, opts)?
    } else {
        layout_case(&l.model, pt, &ce, opts, profile)?
    };
    Ok((ce, scene))
}

fn cmd_plot(a: PlotArgs, err: &mut dyn Write) -> CliResult<()> {
    check_display(&a.display)?;
    if a.case.is_none() && (a.staircase || a.profile) {
        return Err(CliError::Usage("--staircase and --profile need --case".into()));
    }
    let g = geometry(a.display.width, a.display.height)?;
    let style = load_style()?;
    let l = load_inputs(&a.input, err)?;
    let pt = compute_terms(&l.model, &l.data)?;
    let opts = display_options(&a.display);
    let scene = match &a.case {
        None => layout_overall(&l.model, &pt, &opts)?,
        Some(spec) => case_scene(&l, &pt, spec, a.staircase, a.profile, &opts)?.1,
    };
    write_file(&a.out, &render_svg(&scene, &g, &style)?)
}

fn cmd_explain(a: ExplainArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    check_display(&a.display)?;
    if a.out.is_none() && (a.staircase || a.profile) {
        return Err(CliError::Usage("--staircase and --profile need --out".into()));
    }
    let g = geometry(a.display.width, a.display.height)?;
    let style = load_style()?;
    let l = load_inputs(&a.input, err)?;
    let pt = compute_terms(&l.model, &l.data)?;
    let opts = display_options(&a.display);
    let (ce, scene) = case_scene(&l, &pt, &a.case, a.staircase, a.profile, &opts)?;
    if let Some(path) = &a.out {
        write_file(path, &render_svg(&scene, &g, &style)?)?;
    }
    write_out(out, &print_case_table(&ce))
}

fn cmd_cor(a: CorArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let g = geometry(a.width, a.height)?;
    let style = load_style()?;
    let (_, _, pt) = load_terms(&a.input, err)?;
    let tc = term_covariance(&pt)?;
    for name in &tc.excluded {
        let _ = writeln!(err, "warning: term `{name}` is constant and left out");
    }
    let opts = PredscorOptions {
        sort_by_stdev: a.sort_by_stdev,
        absolute: a.abs,
        cell_area: match a.cell_area {
            CellAreaArg::Variance => CellArea::Variance,
            CellAreaArg::Stdev => CellArea::Stdev,
        },
        classic: a.classic,
        title: a.title.clone(),
    };
    let scene = layout_predscor(&tc, &opts);
    write_file(&a.out, &render_svg(&scene, &g, &style)?)?;

    let w = tc.names.iter().map(|n| n.len()).max().unwrap_or(0).max(6);
    let mut text = format!("{:>w$}", "");
    for n in &tc.names {
        text.push_str(&format!(" {n:>w$}"));
    }
    text.push('\n');
    for (i, n) in tc.names.iter().enumerate() {
        text.push_str(&format!("{n:>w$}"));
        for r in &tc.correlation[i] {
            text.push_str(&format!(" {r:>w$.3}"));
        }
        text.push('\n');
    }
    write_out(out, &text)
}
