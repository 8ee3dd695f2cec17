use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use etea_core::etea::{write_history, GaParams};
use etea_core::features::{read_records, RECORD_HEADER};
use etea_core::mining::{format_report, run_pipeline, MiningConfig, TreeParams};
use etea_core::session::{replay_session, CreateRequest, SpaceRequest};
use etea_core::{
    run_simulation, DecisionTree, EteaConfig, ScorerConfig, ScorerMode, SessionConfig, SessionMode, SessionStore,
    SyntheticUser, Variant,
};

use crate::error::{CliError, CliResult};
use crate::{EngineArgs, MineArgs, RecordArgs, ReplayArgs, SimulateArgs, UserArgs};

impl UserArgs {
    pub fn resolve(&self) -> SyntheticUser {
        let d = SyntheticUser::default();
        SyntheticUser {
            beta: self.beta.unwrap_or(d.beta),
            dwell_ms_mean: self.dwell_ms_mean.unwrap_or(d.dwell_ms_mean),
            dwell_ms_sd: self.dwell_ms_sd.unwrap_or(d.dwell_ms_sd),
            min_visits: self.min_visits.unwrap_or(d.min_visits),
            max_visits: self.max_visits.unwrap_or(d.max_visits),
            pupil_base_mm: self.pupil_base.unwrap_or(d.pupil_base_mm),
            pupil_gain_mm: self.pupil_gain.unwrap_or(d.pupil_gain_mm),
            position_noise: self.position_noise.unwrap_or(d.position_noise),
            pupil_noise_mm: self.pupil_noise.unwrap_or(d.pupil_noise_mm),
        }
    }
}

impl EngineArgs {
    pub fn resolve(&self) -> CliResult<EteaConfig> {
        let d = ScorerConfig::default();
        let mut scorer = ScorerConfig {
            w_time: self.w_time.unwrap_or(d.w_time),
            w_trans: self.w_trans.unwrap_or(d.w_trans),
            w_cog: self.w_cog.unwrap_or(d.w_cog),
            selected_bonus: self.selected_bonus.unwrap_or(d.selected_bonus),
            ..d
        };
        if let Some(path) = &self.model {
            scorer.model = Some(Arc::new(load_model(path)?));
            scorer.mode = ScorerMode::Model;
        }
        let g = GaParams::default();
        let ga = GaParams {
            parents: self.parents.unwrap_or(g.parents),
            elites: self.elites.unwrap_or(g.elites),
            mutation_rate: self.mutation_rate.unwrap_or(g.mutation_rate),
        };
        Ok(EteaConfig { scorer, ga })
    }
}

pub fn load_model(path: &Path) -> CliResult<DecisionTree> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    Ok(DecisionTree::parse_model(&text)?)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent.display(), e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path.display(), e))
}

/// Writes `body` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut out = create(p)?;
            body(&mut out)?;
            out.flush().map_err(|e| CliError::io(p.display(), e))
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            body(&mut out)?;
            Ok(out.flush()?)
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let user = args.user.resolve();
    let config = args.engine.resolve()?;
    let history = run_simulation(args.seed, args.generations, &user, &config)?;
    emit(args.out.as_deref(), |out| Ok(write_history(out, &history)?))?;

    let last = history.last().expect("history holds the initial population");
    let best = last.genomes.iter().max_by(|a, b| a.m1().total_cmp(&b.m1())).expect("eight genomes");
    let summary = format!(
        "seed {}, {} generations\nfinal best m1: {:.3}\nfinal mean m1: {:.3}\nbest genome: #{}\n",
        args.seed, args.generations, last.best_m1, last.mean_m1, best
    );
    // keep stdout clean for the CSV when it goes there
    if args.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

pub fn cmd_mine(args: &MineArgs) -> CliResult<()> {
    if args.model_out.is_some() && args.variants.len() != 1 {
        return Err(CliError::Usage("--model-out needs exactly one --variant".into()));
    }
    let file = File::open(&args.records).map_err(|e| CliError::io(args.records.display(), e))?;
    let records = read_records(BufReader::new(file))?;
    let d = TreeParams::default();
    let config = MiningConfig {
        bins: args.bins,
        variants: if args.variants.is_empty() { Variant::ALL.to_vec() } else { args.variants.clone() },
        folds: args.folds,
        seed: args.seed,
        tree: TreeParams { min_leaf: args.min_leaf.unwrap_or(d.min_leaf), max_depth: args.max_depth.unwrap_or(d.max_depth), ..d },
    };
    let report = run_pipeline(&records, &config)?;
    let text = format_report(&report);
    emit(args.out.as_deref(), |out| Ok(out.write_all(text.as_bytes())?))?;
    if let Some(path) = &args.model_out {
        let model = report.models[0].tree.to_model_string();
        emit(Some(path), |out| Ok(out.write_all(model.as_bytes())?))?;
    }
    Ok(())
}

pub fn cmd_replay(args: &ReplayArgs) -> CliResult<()> {
    if !args.dir.is_dir() {
        return Err(CliError::Io(format!("{}: not a session directory", args.dir.display())));
    }
    let report = replay_session(&args.dir)?;
    if let Some(path) = &args.out {
        emit(Some(path), |out| {
            writeln!(out, "{RECORD_HEADER}")?;
            for line in &report.recomputed {
                writeln!(out, "{line}")?;
            }
            Ok(())
        })?;
    }
    println!(
        "session {}: {} screens, {} stored records, {} diffs",
        report.session_id,
        report.screens,
        report.records,
        report.diffs.len()
    );
    for d in &report.diffs {
        println!("row {} (screen {}, zone {}) differs", d.row, d.screen, d.zone);
        println!("  stored:     {}", d.stored.as_deref().unwrap_or("<missing>"));
        println!("  recomputed: {}", d.recomputed.as_deref().unwrap_or("<missing>"));
    }
    match report.diffs.first() {
        None => Ok(()),
        Some(d) => Err(CliError::Validation(format!(
            "replay mismatch: {} of {} records differ, first at row {}",
            report.diffs.len(),
            report.records.max(report.recomputed.len()),
            d.row
        ))),
    }
}

pub fn cmd_record(args: &RecordArgs) -> CliResult<()> {
    let engine = args.engine.resolve()?;
    let store = SessionStore::persistent(args.data_dir.clone());
    let config = SessionConfig {
        mode: SessionMode::Synthetic,
        scorer: engine.scorer,
        ga: engine.ga,
        user: args.user.resolve(),
        ..SessionConfig::default()
    };
    let mut csv = format!("{RECORD_HEADER}\n");
    for i in 0..args.sessions {
        let request = CreateRequest { subject_id: i, seed: args.seed + u64::from(i), config: Some(config.clone()) };
        let id = store.create(request)?.session_id;
        for _ in 0..args.screens {
            store.space(&id, SpaceRequest::default())?;
        }
        csv.extend(store.export(&id)?.lines().skip(1).map(|l| format!("{l}\n")));
        println!("{}", args.data_dir.join(&id).display());
    }
    if let Some(path) = &args.records_out {
        emit(Some(path), |out| Ok(out.write_all(csv.as_bytes())?))?;
    }
    Ok(())
}
