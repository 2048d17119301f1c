//! `simulate`, `analyze` and `report`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fiberlink_core::observables::default_averaging_tau;
use fiberlink_core::stats::StabilityPoint;
use fiberlink_core::{
    accuracy_report, combine_observables, count_lambda, count_pi, cross_correlation,
    detect_cycle_slips, fit_loglog_slope, link_temperature_excursion, phase_psd,
    predict_interferometric_ledger, reciprocity_estimate, simulate_link, stability_deviation,
    uptime, CounterKind, Error as CoreError, Estimator, FrequencySeries, LinkConfig, ObservableSet,
    PsdMethod, Sampled, TauGrid,
};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{Analysis, CampaignConfig};
use crate::counter_file::{read_counter_file, write_atomic, write_counter_file, CounterFile};
use crate::error::{CliError, Result};

const RAW: [&str; 4] = ["ANC", "RT", "OWB", "OWF"];
const ACCURACY_NAMES: [&str; 6] = ["TWU1", "TWU2", "TWU3", "TWB1", "TWB2", "TWB3"];
const RECIPROCITY_NAMES: [&str; 2] = ["TWB3", "TWNF"];
const ESTIMATORS: [Estimator; 3] = [Estimator::Adev, Estimator::Oadev, Estimator::Mdev];

/// Everything needed to rerun one simulated record bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub config_hash: String,
    pub seed: u64,
    pub duration_s: f64,
    pub internal_rate_hz: f64,
    pub gate_s: f64,
    pub start_mjd: i64,
    pub link: LinkConfig,
}

impl Sidecar {
    pub fn path_for(dir: &Path, seed: u64) -> PathBuf {
        dir.join(format!("seed-{seed}.json"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRun {
    pub seed: u64,
    pub pi: PathBuf,
    pub lambda: PathBuf,
    pub sidecar: PathBuf,
}

fn kind_tag(kind: CounterKind) -> &'static str {
    match kind {
        CounterKind::Pi => "pi",
        CounterKind::Lambda => "lambda",
    }
}

fn kind_rank(kind: CounterKind) -> u8 {
    match kind {
        CounterKind::Pi => 0,
        CounterKind::Lambda => 1,
    }
}

/// Π and Λ counter files of one seed. Both hold `duration / gate` rows with
/// identical timestamps: the link is simulated for one extra gate and the
/// first Π output, which has no Λ partner, is dropped.
pub fn simulate_record(cfg: &CampaignConfig, seed: u64) -> Result<(CounterFile, CounterFile)> {
    cfg.validate()?;
    let gates = cfg.gates();
    let span = (gates + 1) as f64 * cfg.gate_s;
    let raw = simulate_link(&cfg.link, span, cfg.internal_rate_hz, seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let hash = cfg.link.hash();
    let mut pi = Vec::with_capacity(4);
    let mut lambda = Vec::with_capacity(4);
    for (name, phase) in raw.raw() {
        let p = count_pi(phase, cfg.gate_s)?;
        let l = count_lambda(phase, cfg.gate_s, cfg.internal_rate_hz)?;
        debug_assert_eq!(p.len(), gates + 1);
        debug_assert_eq!(l.len(), gates);
        pi.push((name, p.slice(1, gates)));
        lambda.push((name, l.slice(0, gates)));
    }
    let build = |set: &[(&str, FrequencySeries)]| {
        let refs: Vec<(&str, &FrequencySeries)> = set.iter().map(|(n, s)| (*n, s)).collect();
        CounterFile::from_series(cfg.start_mjd, &hash, Some(seed), &refs)
            .map_err(|e| CliError::Data(e.to_string()))
    };
    Ok((build(&pi)?, build(&lambda)?))
}

/// Runs every seed (or `seeds`, when given) and writes
/// `seed-N.pi.txt`, `seed-N.lambda.txt` and `seed-N.json` under `out`
/// (default: the configured output directory).
pub fn simulate_campaign(
    cfg: &CampaignConfig,
    seeds: Option<&[u64]>,
    out: Option<&Path>,
) -> Result<Vec<SimulatedRun>> {
    let mut cfg = cfg.clone();
    if let Some(s) = seeds {
        cfg.seeds = s.to_vec();
    }
    if let Some(o) = out {
        cfg.outputs = o.to_path_buf();
    }
    cfg.validate()?;
    let dir = cfg.outputs.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        info!("simulating seed {seed}: {} gates", cfg.gates());
        let (pi, lambda) = simulate_record(&cfg, seed)?;
        let run = SimulatedRun {
            seed,
            pi: dir.join(format!("seed-{seed}.pi.txt")),
            lambda: dir.join(format!("seed-{seed}.lambda.txt")),
            sidecar: Sidecar::path_for(&dir, seed),
        };
        write_counter_file(&run.pi, &pi)?;
        write_counter_file(&run.lambda, &lambda)?;
        let sidecar = Sidecar {
            config_hash: cfg.link.hash(),
            seed,
            duration_s: cfg.duration_s,
            internal_rate_hz: cfg.internal_rate_hz,
            gate_s: cfg.gate_s,
            start_mjd: cfg.start_mjd,
            link: cfg.link.clone(),
        };
        let mut json =
            serde_json::to_string_pretty(&sidecar).map_err(|e| CliError::Data(e.to_string()))?;
        json.push('\n');
        write_atomic(&run.sidecar, json.as_bytes())?;
        runs.push(run);
    }
    Ok(runs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    /// Counter files of one record, at most one per counter kind.
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    pub analyses: Vec<Analysis>,
    /// Averaging time for accuracy and reciprocity; a quarter of the record
    /// when absent.
    pub tau_avg_s: Option<f64>,
    pub slip_threshold_sigma: Option<f64>,
}

/// One counter file with its observables, after optional slip flagging.
struct Record {
    path: PathBuf,
    file: CounterFile,
    set: ObservableSet<FrequencySeries>,
    slips: Vec<(String, usize)>,
}

impl Record {
    fn kind(&self) -> CounterKind {
        self.file.header.kind
    }

    fn named(&self) -> Vec<(&'static str, &FrequencySeries)> {
        self.set.all()
    }

    fn get(&self, name: &str) -> &FrequencySeries {
        self.set.get(name).expect("observable present")
    }
}

fn data(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn load_record(path: &Path, slip_threshold: Option<f64>) -> Result<Record> {
    let mut file = read_counter_file(path)?;
    for name in RAW {
        if file.channel_index(name).is_none() {
            return Err(data(
                path,
                format!("channel {name} missing; two-way observables need ANC, RT, OWB and OWF"),
            ));
        }
    }
    let mut slips = Vec::new();
    if let Some(k) = slip_threshold {
        for name in RAW {
            let s = file.series(name).map_err(|e| data(path, e))?;
            let report = detect_cycle_slips(&s, k).map_err(|e| data(path, e))?;
            file.mark_slips(name, &report.flagged)
                .map_err(|e| data(path, e))?;
            slips.extend(report.flagged.iter().map(|i| (name.to_string(), *i)));
        }
    }
    let series = |n: &str| file.series(n).map_err(|e| data(path, e));
    let raw = ObservableSet::from_raw(
        series("ANC")?,
        series("RT")?,
        series("OWB")?,
        series("OWF")?,
    );
    let set = combine_observables(&raw).map_err(|e| data(path, e))?;
    Ok(Record {
        path: path.to_path_buf(),
        file,
        set,
        slips,
    })
}

fn check_consistent(records: &[Record]) -> Result<()> {
    let first = &records[0];
    let h0 = &first.file.header;
    for r in &records[1..] {
        let h = &r.file.header;
        let mut diffs = Vec::new();
        if h.channels != h0.channels {
            diffs.push("channels");
        }
        if h.carrier_hz != h0.carrier_hz {
            diffs.push("carrier_hz");
        }
        if h.gate_s != h0.gate_s {
            diffs.push("gate_s");
        }
        if (h.start_mjd, h.start_sod) != (h0.start_mjd, h0.start_sod) {
            diffs.push("start timestamp");
        }
        if h.config_hash != h0.config_hash {
            diffs.push("config_hash");
        }
        if h.seed != h0.seed {
            diffs.push("seed");
        }
        if r.file.rows.len() != first.file.rows.len() {
            diffs.push("row count");
        }
        if h.kind == h0.kind {
            diffs.push("kind (one file per counter kind)");
        }
        if !diffs.is_empty() {
            return Err(CliError::Data(format!(
                "header mismatch between {} and {}: {}",
                first.path.display(),
                r.path.display(),
                diffs.join(", ")
            )));
        }
    }
    Ok(())
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_value(v: Option<f64>) -> String {
    v.map(fmt_value).unwrap_or_else(|| "-".into())
}

fn estimator_tag(e: Estimator) -> &'static str {
    match e {
        Estimator::Adev => "adev",
        Estimator::Oadev => "oadev",
        Estimator::Mdev => "mdev",
    }
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, text.as_bytes())?;
        self.written.push(path);
        Ok(())
    }
}

/// Columnar `tau_s NAME_dev NAME_ci …` table; taus missing for an
/// observable are written as `-`.
pub fn stability_table(named: &[(&str, &FrequencySeries)], estimator: Estimator) -> Result<String> {
    let mut curves = Vec::with_capacity(named.len());
    for (name, y) in named {
        let curve = stability_deviation(y, estimator, &TauGrid::Octave)
            .map_err(|e| CliError::Data(format!("{estimator} of {name}: {e}")))?;
        curves.push(curve);
    }
    let taus: BTreeSet<u64> = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.tau_s.to_bits()))
        .collect();
    let mut taus: Vec<f64> = taus.into_iter().map(f64::from_bits).collect();
    taus.sort_by(f64::total_cmp);

    let mut out = String::from("tau_s");
    for (name, _) in named {
        let _ = write!(out, "\t{name}_dev\t{name}_ci");
    }
    out.push('\n');
    for tau in taus {
        let _ = write!(out, "{tau}");
        for c in &curves {
            let p: Option<&StabilityPoint> = c.points.iter().find(|p| p.tau_s == tau);
            let _ = write!(
                out,
                "\t{}\t{}",
                opt_value(p.map(|p| p.dev)),
                opt_value(p.map(|p| p.ci))
            );
        }
        out.push('\n');
    }
    Ok(out)
}

/// Longest run of samples valid in every series.
fn longest_joint_run(named: &[(&str, &FrequencySeries)]) -> (usize, usize) {
    let n = named[0].1.len();
    let (mut best, mut start) = ((0, 0), 0);
    for i in 0..=n {
        let ok = i < n && named.iter().all(|(_, s)| s.is_valid(i));
        if !ok {
            if i - start > best.1 {
                best = (start, i - start);
            }
            start = i + 1;
        }
    }
    best
}

fn psd_table(named: &[(&str, &FrequencySeries)]) -> Result<String> {
    let (start, len) = longest_joint_run(named);
    let mut spectra = Vec::with_capacity(named.len());
    for (name, y) in named {
        let x = y
            .slice(start, len)
            .to_phase()
            .and_then(|x| phase_psd(&x, &PsdMethod::default()))
            .map_err(|e| CliError::Data(format!("PSD of {name}: {e}")))?;
        spectra.push(x);
    }
    let mut out = String::from("f_hz");
    for (name, _) in named {
        let _ = write!(out, "\t{name}");
    }
    out.push('\n');
    for (j, f) in spectra[0].freqs.iter().enumerate() {
        let _ = write!(out, "{}", fmt_value(*f));
        for s in &spectra {
            let _ = write!(out, "\t{}", fmt_value(s.density[j]));
        }
        out.push('\n');
    }
    Ok(out)
}

fn ledger_table(sidecar: &Sidecar) -> Result<String> {
    let m = (sidecar.gate_s * sidecar.internal_rate_hz).round() as usize;
    let gates = (sidecar.duration_s / sidecar.gate_s).round() as usize;
    let n = (gates + 1) * m + 1;
    let dt = 1.0 / sidecar.internal_rate_hz;
    let delta_t = link_temperature_excursion(&sidecar.link, n, dt, sidecar.seed)?;
    let ledger = predict_interferometric_ledger(&sidecar.link, &delta_t)?;
    let named = ledger.named();
    let time_errors: Vec<Vec<f64>> = named.iter().map(|(_, x)| x.time_error()).collect();

    let mut out = String::from("t_s\tdelta_T_K");
    for (name, _) in &named {
        let _ = write!(out, "\t{name}_fs");
    }
    out.push('\n');
    for j in 0..=gates + 1 {
        let i = j * m;
        let _ = write!(
            out,
            "{}\t{}",
            j as f64 * sidecar.gate_s,
            fmt_value(delta_t.kelvin[i])
        );
        for te in &time_errors {
            let _ = write!(out, "\t{}", fmt_value(te[i] * 1e15));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Files written by [`analyze`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Runs the requested analyses on the counter files of one record and
/// writes plot-ready tables under `opts.out`.
pub fn analyze(opts: &AnalyzeOptions) -> Result<AnalysisOutput> {
    if opts.inputs.is_empty() {
        return Err(CliError::Config(
            "analyze needs at least one counter file".into(),
        ));
    }
    if opts.analyses.is_empty() {
        return Err(CliError::Config(
            "analyses: at least one analysis is required".into(),
        ));
    }
    if let Some(t) = opts.tau_avg_s {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!(
                "tau_avg_s: must be positive, got {t}"
            )));
        }
    }
    if let Some(k) = opts.slip_threshold_sigma {
        if !(k > 0.0 && k.is_finite()) {
            return Err(CliError::Config(format!(
                "slip_threshold_sigma: must be positive, got {k}"
            )));
        }
    }
    let mut records = opts
        .inputs
        .iter()
        .map(|p| load_record(p, opts.slip_threshold_sigma))
        .collect::<Result<Vec<_>>>()?;
    check_consistent(&records)?;
    records.sort_by_key(|r| kind_rank(r.kind()));

    std::fs::create_dir_all(&opts.out).map_err(|e| CliError::io(&opts.out, e))?;
    let mut w = Writer {
        dir: &opts.out,
        written: Vec::new(),
    };
    let mut analyses = opts.analyses.clone();
    analyses.sort();
    analyses.dedup();

    let reference = records[0].get("TWB3");
    let tau_avg = opts
        .tau_avg_s
        .unwrap_or_else(|| default_averaging_tau(reference));
    let header = &records[0].file.header;

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "record: {} gates of {} s",
        records[0].file.rows.len(),
        header.gate_s
    );
    let _ = writeln!(
        summary,
        "start: MJD {} + {} s",
        header.start_mjd, header.start_sod
    );
    let _ = writeln!(summary, "config_hash: {}", header.config_hash);
    if let Some(seed) = header.seed {
        let _ = writeln!(summary, "seed: {seed}");
    }
    let _ = writeln!(
        summary,
        "analyses: {}",
        analyses
            .iter()
            .map(|a| a.name())
            .collect::<Vec<_>>()
            .join(", ")
    );
    for r in &records {
        let _ = write!(summary, "{} uptime:", r.kind());
        for name in RAW {
            let _ = write!(summary, " {name} {:.6}", uptime(r.get(name)));
        }
        summary.push('\n');
        if opts.slip_threshold_sigma.is_some() {
            let _ = write!(summary, "{} slips:", r.kind());
            for name in RAW {
                let k = r.slips.iter().filter(|(n, _)| n == name).count();
                let _ = write!(summary, " {name} {k}");
            }
            summary.push('\n');
        }
    }

    if opts.slip_threshold_sigma.is_some() {
        for r in &records {
            w.put(
                &format!("flagged.{}.txt", kind_tag(r.kind())),
                &r.file.render(),
            )?;
        }
    }

    for analysis in &analyses {
        match analysis {
            Analysis::Stability => {
                for r in &records {
                    for est in ESTIMATORS {
                        let table = stability_table(&r.named(), est)?;
                        w.put(
                            &format!(
                                "stability-{}-{}.tsv",
                                kind_tag(r.kind()),
                                estimator_tag(est)
                            ),
                            &table,
                        )?;
                    }
                    for name in RECIPROCITY_NAMES {
                        let curve =
                            stability_deviation(r.get(name), Estimator::Mdev, &TauGrid::Octave)?;
                        let line = match fit_loglog_slope(&curve, 0.0, f64::INFINITY) {
                            Ok(fit) => format!(
                                "{:.3} ± {:.3} over {} points",
                                fit.exponent, fit.stderr, fit.points
                            ),
                            Err(e) => format!("not fitted ({e})"),
                        };
                        let _ = writeln!(summary, "{} MDEV slope {name}: {line}", r.kind());
                    }
                }
            }
            Analysis::Psd => {
                let r = &records[0];
                w.put(
                    &format!("psd-{}.tsv", kind_tag(r.kind())),
                    &psd_table(&r.named())?,
                )?;
            }
            Analysis::Accuracy => {
                let mut inputs = Vec::new();
                for r in &records {
                    for name in ACCURACY_NAMES {
                        inputs.push((name, r.get(name)));
                    }
                }
                let report = accuracy_report(&inputs, tau_avg)?;
                w.put("accuracy.txt", &report.render_table())?;
                let mut tsv =
                    String::from("name\tkind\tmean\toadev\tmdev\tsamples\tgap_fraction\n");
                for row in &report.rows {
                    let _ = writeln!(
                        tsv,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        row.name,
                        row.kind,
                        fmt_value(row.mean),
                        fmt_value(row.oadev),
                        fmt_value(row.mdev),
                        row.samples,
                        fmt_value(row.gap_fraction)
                    );
                }
                w.put("accuracy.tsv", &tsv)?;
            }
            Analysis::Reciprocity => {
                let mut text = String::new();
                let mut tsv = String::from(
                    "kind\tname\tmean\tuncertainty\toadev\tmdev\ttau_s\tsamples\tverdict\n",
                );
                for r in &records {
                    for name in RECIPROCITY_NAMES {
                        let rep = reciprocity_estimate(r.get(name), tau_avg)?;
                        let _ = writeln!(text, "{} {name}: {rep}", r.kind());
                        let _ = writeln!(
                            tsv,
                            "{}\t{name}\t{}\t{}\t{}\t{}\t{}\t{}\t{:?}",
                            r.kind(),
                            fmt_value(rep.mean),
                            fmt_value(rep.uncertainty),
                            fmt_value(rep.oadev),
                            fmt_value(rep.mdev),
                            rep.averaging_tau_s,
                            rep.samples,
                            rep.verdict
                        );
                    }
                }
                w.put("reciprocity.txt", &text)?;
                w.put("reciprocity.tsv", &tsv)?;
            }
            Analysis::Correlation => {
                let mut tsv = String::from("kind\ta\tb\tr\tone_minus_r\tsamples\n");
                for r in &records {
                    for (i, a) in RAW.iter().enumerate() {
                        for b in &RAW[i + 1..] {
                            let (rv, om, n) = match cross_correlation(r.get(a), r.get(b)) {
                                Ok(c) => (
                                    fmt_value(c.r),
                                    opt_value(c.one_minus_r),
                                    c.samples.to_string(),
                                ),
                                Err(CoreError::ZeroVariance(_))
                                | Err(CoreError::TooManyGaps { .. }) => {
                                    ("-".into(), "-".into(), "-".into())
                                }
                                Err(e) => return Err(e.into()),
                            };
                            let _ = writeln!(tsv, "{}\t{a}\t{b}\t{rv}\t{om}\t{n}", r.kind());
                        }
                    }
                }
                w.put("correlation.tsv", &tsv)?;
            }
            Analysis::Ledger => {
                let r = &records[0];
                let seed = r.file.header.seed.ok_or_else(|| {
                    data(
                        &r.path,
                        "ledger needs a seed in the header to locate the sidecar",
                    )
                })?;
                let dir = r.path.parent().unwrap_or(Path::new("."));
                let path = Sidecar::path_for(dir, seed);
                let sidecar = Sidecar::load(&path)?;
                if sidecar.config_hash != r.file.header.config_hash
                    || sidecar.link.hash() != sidecar.config_hash
                {
                    return Err(data(&path, "config hash does not match the counter file"));
                }
                w.put("ledger.tsv", &ledger_table(&sidecar)?)?;
            }
        }
    }
    w.put("summary.txt", &summary)?;
    Ok(AnalysisOutput {
        files: w.written,
        summary,
    })
}

/// Summary, accuracy table and reciprocity verdicts of an analysis
/// directory.
pub fn report(dir: &Path) -> Result<String> {
    let summary = dir.join("summary.txt");
    if !summary.is_file() {
        return Err(CliError::Data(format!(
            "{}: not an analysis directory (no summary.txt)",
            dir.display()
        )));
    }
    let mut out = String::new();
    for name in ["summary.txt", "accuracy.txt", "reciprocity.txt"] {
        let path = dir.join(name);
        if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&text);
        }
    }
    Ok(out)
}
