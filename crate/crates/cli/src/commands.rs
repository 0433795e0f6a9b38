use std::path::{Path, PathBuf};
use std::process::ExitCode;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use saelab::attack::{
    efficiency, plan_measurements, prune, write_lines, AttackError, AttackPlan, Dictionary,
    LeakDistribution,
};
use saelab::dragonfly::{MacAddr, Mode, Station, TranscriptRecord};
use saelab::field_curve::CurveId;
use saelab::leakage::{
    analytic_expected_bits, information_bits, observe_session, simulate_measurements,
    victim_events, Channels, Fingerprint, LibraryProfile, MeasurementNoise, SessionPublic,
};
use saelab::traces::{
    classify, classify_repeated, report_csv, synthesize_trace, Classification, Cutoffs, RawTrace,
    TraceModel,
};

use crate::args::{
    AttackArgs, ChannelsArg, ClassifyArgs, Cli, Command, Common, DictionaryArgs, Format,
    HandshakeArgs, LeakKind, LeaksimArgs, MacStrategy, ModelKind, PlanArgs, RunArgs, StatsArgs,
};
use crate::config::ConfigFile;
use crate::CliError;

pub const OUT_DIR_ENV: &str = "SAELAB_OUT_DIR";
pub const DEFAULT_PASSWORD: &str = "correct horse battery staple";
const DEFAULT_MAC: &str = "02:00:00:00:00:01";
const DEFAULT_PEER_MAC: &str = "02:00:00:00:01:00";

pub fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let ctx = Ctx::new(cli.common)?;
    match cli.command {
        Command::Handshake(a) => handshake(&ctx, a),
        Command::Leaksim(a) => leaksim(&ctx, a),
        Command::Stats(a) => stats(&ctx, a),
        Command::Attack(a) => attack(&ctx, a),
        Command::Plan(a) => plan(&ctx, a),
        Command::Classify(a) => classify_cmd(&ctx, a),
        Command::Dictionary(a) => dictionary(&ctx, a),
    }
}

/// Resolves `path` against the output directory variable when relative.
pub fn out_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, body: &[u8]) -> Result<(), CliError> {
    let path = out_path(path);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(&path, body)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn csv<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("row serializes");
    }
    w.into_inner().expect("in-memory writer")
}

struct Ctx {
    cfg: ConfigFile,
    seed: Option<u64>,
    format: Option<Format>,
    output: Option<PathBuf>,
    threads: usize,
}

impl Ctx {
    fn new(c: Common) -> Result<Ctx, CliError> {
        let cfg = match &c.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(Ctx {
            seed: cfg.pick(c.seed, "seed")?,
            format: cfg.pick(c.format, "format")?,
            output: cfg.pick(c.output, "output")?,
            threads: cfg.pick(c.threads, "threads")?.unwrap_or(0),
            cfg,
        })
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }

    fn rng(&self) -> Result<ChaCha20Rng, CliError> {
        let seed = match self.seed {
            Some(s) => s,
            None if std::env::var_os("CI").is_some() => {
                return Err(CliError::Usage(
                    "--seed is required when CI is set".to_string(),
                ))
            }
            None => {
                let s = rand::random();
                eprintln!("saelab: seed {s}");
                s
            }
        };
        Ok(ChaCha20Rng::seed_from_u64(seed))
    }

    fn emit(&self, body: &[u8]) -> Result<(), CliError> {
        use std::io::Write;
        match &self.output {
            Some(p) => write_file(p, body),
            None => std::io::stdout()
                .write_all(body)
                .map_err(|e| CliError::Failed(format!("cannot write stdout: {e}"))),
        }
    }
}

fn password_from(
    literal: Option<String>,
    file: Option<PathBuf>,
    cfg: &ConfigFile,
    key: &str,
) -> Result<Option<Vec<u8>>, CliError> {
    let literal = match literal {
        Some(l) => Some(l),
        None if file.is_none() => cfg.get::<String>(key)?,
        None => None,
    };
    if let Some(l) = literal {
        return Ok(Some(l.into_bytes()));
    }
    let file = match file {
        Some(f) => Some(f),
        None => cfg.get::<PathBuf>(&format!("{key}_file"))?,
    };
    let Some(file) = file else {
        return Ok(None);
    };
    let text = read_file(&file)?;
    let line = text.split(|&b| b == b'\n').next().unwrap_or_default();
    Ok(Some(line.strip_suffix(b"\r").unwrap_or(line).to_vec()))
}

/// Resolved session parameters for the conversion-running commands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub curve: CurveId,
    pub profile: LibraryProfile,
    pub password: Vec<u8>,
    pub ssid: Vec<u8>,
    pub identifier: Option<Vec<u8>>,
    pub mac: MacAddr,
    pub peer_mac: MacAddr,
    pub mac_strategy: MacStrategy,
    pub sessions: usize,
}

struct Defaults {
    profile: LibraryProfile,
    sessions: usize,
    mac_strategy: MacStrategy,
}

impl RunConfig {
    fn resolve(a: RunArgs, cfg: &ConfigFile, d: Defaults) -> Result<RunConfig, CliError> {
        let sessions = cfg.pick(a.sessions, "sessions")?.unwrap_or(d.sessions);
        if sessions == 0 {
            return Err(usage("at least one session is required"));
        }
        let password = password_from(a.password, a.password_file, cfg, "password")?
            .unwrap_or_else(|| DEFAULT_PASSWORD.as_bytes().to_vec());
        Ok(RunConfig {
            mode: cfg.pick(a.mode, "mode")?.unwrap_or(Mode::Sae),
            curve: cfg.pick(a.curve, "curve")?.unwrap_or(CurveId::P256),
            profile: cfg.pick(a.profile, "profile")?.unwrap_or(d.profile),
            password,
            ssid: cfg
                .pick(a.ssid, "ssid")?
                .unwrap_or_else(|| "saelab".into())
                .into_bytes(),
            identifier: cfg
                .pick(a.identifier, "identifier")?
                .map(String::into_bytes),
            mac: cfg
                .pick(a.mac, "mac")?
                .unwrap_or_else(|| DEFAULT_MAC.parse().expect("valid default")),
            peer_mac: cfg
                .pick(a.peer_mac, "peer_mac")?
                .unwrap_or_else(|| DEFAULT_PEER_MAC.parse().expect("valid default")),
            mac_strategy: cfg
                .pick(a.mac_strategy, "mac_strategy")?
                .unwrap_or(d.mac_strategy),
            sessions,
        })
    }

    fn peer_mac_for(&self, session: usize) -> MacAddr {
        match self.mac_strategy {
            MacStrategy::Fixed => self.peer_mac,
            MacStrategy::Incrementing => self.peer_mac.offset(session as u64),
        }
    }
}

#[derive(Serialize)]
struct HandshakeRow {
    session: usize,
    mac_a: MacAddr,
    mac_b: MacAddr,
    confirmed_a: bool,
    confirmed_b: bool,
    agreed: bool,
}

#[derive(Serialize)]
struct HandshakeReport<'a> {
    mode: Mode,
    curve: CurveId,
    profile: LibraryProfile,
    sessions: usize,
    agreed: usize,
    results: &'a [HandshakeRow],
}

fn handshake(ctx: &Ctx, a: HandshakeArgs) -> Result<ExitCode, CliError> {
    let run = RunConfig::resolve(
        a.run,
        &ctx.cfg,
        Defaults {
            profile: LibraryProfile::Hardened,
            sessions: 1,
            mac_strategy: MacStrategy::Fixed,
        },
    )?;
    let peer_cfg = match &a.peer_config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let peer_password =
        match password_from(a.peer_password, a.peer_password_file, &peer_cfg, "password")? {
            Some(p) => p,
            None => password_from(None, None, &ctx.cfg, "peer_password")?
                .unwrap_or_else(|| run.password.clone()),
        };
    let mut rng = ctx.rng()?;
    let station = |mac, pw: &[u8]| {
        Station::new(mac, pw, run.curve, run.mode, run.profile)
            .with_ssid(&run.ssid)
            .with_identifier(run.identifier.as_deref())
    };
    let mut sa = station(run.mac, &run.password);
    let mut sb = station(run.peer_mac, &peer_password);
    let mut rows = Vec::with_capacity(run.sessions);
    let mut transcript: Vec<TranscriptRecord> = Vec::new();
    for i in 0..run.sessions {
        sb.mac = run.peer_mac_for(i);
        let out = sa.handshake(&mut sb, &mut rng).map_err(usage)?;
        transcript.push(sa.transcript(&sb, "a", &out.a));
        transcript.push(sb.transcript(&sa, "b", &out.b));
        rows.push(HandshakeRow {
            session: i,
            mac_a: sa.mac,
            mac_b: sb.mac,
            confirmed_a: out.a.confirmed,
            confirmed_b: out.b.confirmed,
            agreed: out.agreed(),
        });
    }
    if let Some(path) = &a.transcript {
        let mut body = String::new();
        for r in &transcript {
            body.push_str(&serde_json::to_string(r).expect("record serializes"));
            body.push('\n');
        }
        write_file(path, body.as_bytes())?;
    }
    let agreed = rows.iter().filter(|r| r.agreed).count();
    let body = match ctx.format() {
        Format::Json => json(&HandshakeReport {
            mode: run.mode,
            curve: run.curve,
            profile: run.profile,
            sessions: run.sessions,
            agreed,
            results: &rows,
        }),
        Format::Csv => csv(&rows),
    };
    ctx.emit(&body)?;
    if agreed == run.sessions {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("saelab: {agreed}/{} sessions agreed", run.sessions);
        Ok(ExitCode::from(1))
    }
}

#[derive(Serialize)]
struct ObservationRow {
    session: usize,
    mac_a: MacAddr,
    mac_b: MacAddr,
    reliability: u32,
    events: String,
}

fn leaksim(ctx: &Ctx, a: LeaksimArgs) -> Result<ExitCode, CliError> {
    let cfg = &ctx.cfg;
    let run = RunConfig::resolve(
        a.run,
        cfg,
        Defaults {
            profile: LibraryProfile::OpenSsl,
            sessions: 30,
            mac_strategy: MacStrategy::Incrementing,
        },
    )?;
    if run.mac_strategy == MacStrategy::Fixed && run.sessions > 1 {
        return Err(usage(
            "a fingerprint needs distinct sessions; use --mac-strategy incrementing",
        ));
    }
    let repetitions = cfg.pick(a.repetitions, "repetitions")?.unwrap_or(1);
    let noise = MeasurementNoise::new(
        cfg.pick(a.flip_probability, "flip_probability")?
            .unwrap_or(0.0),
        cfg.pick(a.usable_threshold, "usable_threshold")?
            .unwrap_or(MeasurementNoise::DEFAULT.usable_threshold),
    )
    .map_err(usage)?;
    let channels = cfg
        .pick(a.channels, "channels")?
        .map_or(Channels::ALL, |c: ChannelsArg| c.0);
    let password_id = cfg
        .pick(a.password_id, "password_id")?
        .unwrap_or_else(|| "victim".into());
    if !run.profile.leaks_anything() {
        eprintln!(
            "saelab: warning: profile {} leaks nothing; the fingerprint carries no information",
            run.profile
        );
    }
    let mut rng = ctx.rng()?;
    let mut fp = Fingerprint::new(password_id, run.mode, run.profile);
    let mut discarded = 0usize;
    let budget = run.sessions.saturating_mul(100);
    let mut next = 0usize;
    while fp.len() < run.sessions {
        if next == budget {
            return Err(CliError::Failed(format!(
                "only {} usable sessions after {budget} attempts",
                fp.len()
            )));
        }
        let public = SessionPublic {
            mac_a: run.mac,
            mac_b: run.peer_mac_for(next),
            curve: run.curve,
            mode: run.mode,
            ssid: run.ssid.clone(),
            identifier: run.identifier.clone(),
        };
        next += 1;
        let raw = victim_events(&run.password, &public, run.profile, &mut rng).map_err(usage)?;
        let truth = observe_session(public, &raw, run.profile, channels).map_err(usage)?;
        let merged = simulate_measurements(&truth, &noise, repetitions, &mut rng).map_err(usage)?;
        if merged.usable {
            fp.push(merged.observation).map_err(usage)?;
        } else {
            discarded += 1;
        }
    }
    if discarded > 0 {
        eprintln!("saelab: discarded {discarded} low-confidence sessions");
    }
    let body = match ctx.format() {
        Format::Json => {
            let mut s = fp.to_json();
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let rows: Vec<ObservationRow> = fp
                .sessions
                .iter()
                .enumerate()
                .map(|(i, s)| ObservationRow {
                    session: i,
                    mac_a: s.public.mac_a,
                    mac_b: s.public.mac_b,
                    reliability: s.reliability,
                    events: s
                        .events
                        .iter()
                        .map(|e| format!("{:?}:{:?}={}", e.site, e.tag, e.value))
                        .collect::<Vec<_>>()
                        .join(";"),
                })
                .collect();
            csv(&rows)
        }
    };
    ctx.emit(&body)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct StatsRow {
    profile: LibraryProfile,
    mode: Mode,
    curve: CurveId,
    channels: String,
    sessions: usize,
    empirical_bits: f64,
    std_error: f64,
    analytic_bits: f64,
    analytic_decompression: f64,
    analytic_bin2bn: f64,
}

fn channels_name(c: Channels) -> &'static str {
    match (c.decompression, c.bin2bn) {
        (true, true) => "all",
        (true, false) => "decompression",
        (false, true) => "bin2bn",
        (false, false) => "none",
    }
}

fn stats(ctx: &Ctx, a: StatsArgs) -> Result<ExitCode, CliError> {
    let cfg = &ctx.cfg;
    let mode = cfg.pick(a.mode, "mode")?.unwrap_or(Mode::Sae);
    let curve = cfg.pick(a.curve, "curve")?.unwrap_or(CurveId::P256);
    let channels = cfg
        .pick(a.channels, "channels")?
        .map_or(Channels::ALL, |c: ChannelsArg| c.0);
    let sessions = cfg.pick(a.sessions, "sessions")?.unwrap_or(500);
    if sessions < 2 {
        return Err(usage("at least two sessions are required"));
    }
    let profiles: Vec<LibraryProfile> = match cfg.pick(a.profile, "profile")? {
        Some(p) => vec![p],
        None => LibraryProfile::ALL.to_vec(),
    };
    let seed = ctx.rng()?.next_u64();
    let mut rows = Vec::new();
    for profile in profiles {
        // one stream per profile so results do not depend on the selection
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(profile as u64);
        let mut bits = Vec::with_capacity(sessions);
        for _ in 0..sessions {
            let mut password = [0u8; 16];
            rng.fill_bytes(&mut password);
            let mac_a = MacAddr(rng.random());
            let public = SessionPublic {
                mac_a,
                mac_b: mac_a.offset(1),
                curve,
                mode,
                ssid: b"saelab".to_vec(),
                identifier: None,
            };
            let raw = victim_events(&password, &public, profile, &mut rng).map_err(usage)?;
            let obs = observe_session(public, &raw, profile, channels).map_err(usage)?;
            bits.push(information_bits(&obs.events, profile, mode, curve));
        }
        let n = bits.len() as f64;
        let mean = bits.iter().sum::<f64>() / n;
        let var = bits.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let analytic = analytic_expected_bits(profile, mode, curve, channels);
        rows.push(StatsRow {
            profile,
            mode,
            curve,
            channels: channels_name(channels).to_string(),
            sessions,
            empirical_bits: mean,
            std_error: (var / n).sqrt(),
            analytic_bits: analytic.total,
            analytic_decompression: analytic.decompression,
            analytic_bin2bn: analytic.bin2bn,
        });
    }
    let body = match ctx.format() {
        Format::Json => json(&rows),
        Format::Csv => csv(&rows),
    };
    ctx.emit(&body)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct AttackReport {
    dictionary_size: usize,
    sessions: usize,
    measurements: u64,
    survivors: usize,
    /// `log2(dictionary / survivors)`; absent when nothing survives.
    bits_gained: Option<f64>,
    bits_per_measurement: Option<f64>,
    /// Expected bits per measurement for the fingerprint's profile.
    #[serde(rename = "efficiency_D")]
    efficiency_d: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    candidates: Option<Vec<String>>,
}

/// Survivor lists up to this length are echoed in the JSON report.
const ECHO_SURVIVORS: usize = 16;

fn attack(ctx: &Ctx, a: AttackArgs) -> Result<ExitCode, CliError> {
    let dict = Dictionary::parse(&read_file(&a.dictionary)?)
        .map_err(|e| usage(format!("{}: {e}", a.dictionary.display())))?;
    let text = String::from_utf8(read_file(&a.fingerprint)?)
        .map_err(|_| usage(format!("{}: not UTF-8", a.fingerprint.display())))?;
    let fp = Fingerprint::from_json(&text)
        .map_err(|e| usage(format!("{}: {e}", a.fingerprint.display())))?;
    let survivors = prune(&dict, &fp, ctx.threads).map_err(usage)?;
    if let Some(path) = &a.survivors {
        write_file(path, &write_lines(survivors.iter().map(Vec::as_slice)))?;
    }
    if survivors.is_empty() {
        eprintln!("saelab: warning: no candidate survived");
    }
    let measurements = fp.measurements();
    let bits_gained =
        (!survivors.is_empty()).then(|| (dict.len() as f64 / survivors.len() as f64).log2());
    let (curve, channels) = fp
        .sessions
        .first()
        .map_or((CurveId::P256, Channels::ALL), |s| {
            (s.public.curve, s.channels)
        });
    let reps = if fp.is_empty() {
        1
    } else {
        (measurements / fp.len() as u64).max(1) as u32
    };
    let report = AttackReport {
        dictionary_size: dict.len(),
        sessions: fp.len(),
        measurements,
        survivors: survivors.len(),
        bits_gained,
        bits_per_measurement: bits_gained
            .filter(|_| measurements > 0)
            .map(|b| b / measurements as f64),
        efficiency_d: efficiency(&LeakDistribution::from_profile(
            fp.profile, fp.mode, curve, channels, reps,
        )),
        candidates: None,
    };
    let body = match ctx.format() {
        Format::Json => json(&AttackReport {
            candidates: (survivors.len() <= ECHO_SURVIVORS).then(|| {
                survivors
                    .iter()
                    .map(|s| String::from_utf8_lossy(s).into_owned())
                    .collect()
            }),
            ..report
        }),
        Format::Csv => csv(&[report]),
    };
    ctx.emit(&body)?;
    Ok(ExitCode::SUCCESS)
}

fn plan(ctx: &Ctx, a: PlanArgs) -> Result<ExitCode, CliError> {
    let cfg = &ctx.cfg;
    let reps = cfg.pick(a.repetitions, "repetitions")?.unwrap_or(1);
    if reps == 0 {
        return Err(usage("repetitions must be at least 1"));
    }
    let dist = match a.leak {
        LeakKind::Bit => LeakDistribution::single_bit(reps),
        LeakKind::Iteration => LeakDistribution::geometric_iteration(reps),
        LeakKind::Profile => LeakDistribution::from_profile(
            cfg.pick(a.profile, "profile")?
                .unwrap_or(LibraryProfile::OpenSsl),
            cfg.pick(a.mode, "mode")?.unwrap_or(Mode::Sae),
            cfg.pick(a.curve, "curve")?.unwrap_or(CurveId::P256),
            cfg.pick(a.channels, "channels")?
                .map_or(Channels::ALL, |c: ChannelsArg| c.0),
            reps,
        ),
    };
    let plans = a
        .dict_size
        .iter()
        .map(|&d| plan_measurements(d, &dist, a.confidence))
        .collect::<Result<Vec<AttackPlan>, _>>()
        .map_err(|e| match e {
            AttackError::Unsatisfiable => CliError::Failed(e.to_string()),
            other => usage(other),
        })?;
    let body = match ctx.format() {
        Format::Json if plans.len() == 1 => json(&plans[0]),
        Format::Json => json(&plans),
        Format::Csv => csv(&plans),
    };
    ctx.emit(&body)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ClassifyRow<'a> {
    trace_id: &'a str,
    #[serde(flatten)]
    classification: &'a Classification,
}

fn classify_cmd(ctx: &Ctx, a: ClassifyArgs) -> Result<ExitCode, CliError> {
    let model = match a.model {
        ModelKind::Default => TraceModel::default(),
        ModelKind::ZeroNoise => TraceModel::zero_noise(),
        ModelKind::Elevated => TraceModel::elevated_noise(),
    };
    let mut cutoffs = Cutoffs::for_model(&model);
    cutoffs.taken_min = a.taken_min.unwrap_or(cutoffs.taken_min);
    cutoffs.not_taken_max = a.not_taken_max.unwrap_or(cutoffs.not_taken_max);
    if cutoffs.taken_min <= cutoffs.not_taken_max {
        return Err(usage("--taken-min must exceed --not-taken-max"));
    }
    let mut rows: Vec<(String, Classification)> = Vec::new();
    if let Some(n) = a.synth {
        if a.repetitions == 0 {
            return Err(usage("repetitions must be at least 1"));
        }
        let mut rng = ctx.rng()?;
        let (mut correct, mut withheld) = (0usize, 0usize);
        for i in 0..n {
            let taken = rng.random_bool(0.5);
            let traces = (0..a.repetitions)
                .map(|_| synthesize_trace(&model, taken, &mut rng))
                .collect::<Result<Vec<_>, _>>()
                .map_err(usage)?;
            let c = classify_repeated(&traces, &cutoffs).map_err(usage)?;
            let truth = if taken { "taken" } else { "not-taken" };
            match c.verdict.name() {
                "low-confidence" => withheld += 1,
                v if v == truth => correct += 1,
                _ => {}
            }
            rows.push((format!("synth-{i}-{truth}"), c));
        }
        eprintln!(
            "saelab: {correct}/{n} correct, {withheld} low-confidence, {} wrong",
            n - correct - withheld
        );
    } else {
        if a.traces.is_empty() {
            return Err(usage("no trace files given (or use --synth N)"));
        }
        let mut parsed = Vec::with_capacity(a.traces.len());
        for p in &a.traces {
            let text = String::from_utf8(read_file(p)?)
                .map_err(|_| usage(format!("{}: not UTF-8", p.display())))?;
            let t = RawTrace::parse_dat(&text, a.threshold_cycles)
                .map_err(|e| usage(format!("{}: {e}", p.display())))?;
            parsed.push((p.display().to_string(), t));
        }
        if a.repeated {
            let traces: Vec<RawTrace> = parsed.iter().map(|(_, t)| t.clone()).collect();
            let id = parsed
                .iter()
                .map(|(n, _)| n.as_str())
                .collect::<Vec<_>>()
                .join("+");
            rows.push((id, classify_repeated(&traces, &cutoffs).map_err(usage)?));
        } else {
            for (id, t) in parsed {
                let c = classify(&t, &cutoffs).map_err(usage)?;
                rows.push((id, c));
            }
        }
    }
    let body = match ctx.format() {
        Format::Csv => report_csv(rows.iter().map(|(id, c)| (id.as_str(), c))).into_bytes(),
        Format::Json => json(
            &rows
                .iter()
                .map(|(id, c)| ClassifyRow {
                    trace_id: id,
                    classification: c,
                })
                .collect::<Vec<_>>(),
        ),
    };
    ctx.emit(&body)?;
    Ok(ExitCode::SUCCESS)
}

fn dictionary(ctx: &Ctx, a: DictionaryArgs) -> Result<ExitCode, CliError> {
    if a.size == 0 && a.plant.is_none() {
        return Err(usage("a dictionary needs at least one entry"));
    }
    let mut rng = ctx.rng()?;
    let mut dict = Dictionary::random(a.size, &mut rng);
    if let Some(p) = &a.plant {
        if p.is_empty() || p.contains('\n') {
            return Err(usage("planted password must be one non-empty line"));
        }
        dict.plant(p.as_bytes(), &mut rng);
    }
    // the line format is the dictionary file format; JSON is opt-in
    let body = match ctx.format {
        Some(Format::Json) => json(
            &dict
                .entries()
                .iter()
                .map(|e| String::from_utf8_lossy(e))
                .collect::<Vec<_>>(),
        ),
        _ => dict.to_bytes(),
    };
    ctx.emit(&body)?;
    Ok(ExitCode::SUCCESS)
}
