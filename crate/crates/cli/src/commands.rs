use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use compgen_core::composition::{decode_values, encode_composition, format_formula, Composition, ROWS};
use compgen_core::element_data::{vocabulary_from_dataset, ElementTable, ElementVocabulary};
use compgen_core::enumerator::{enumerate_ordered, sample_uniform, EnumOptions, EnumSpec, FilterMode};
use compgen_core::eval::{evaluate as build_report, write_curve_csv, EvalInputs};
use compgen_core::ingest::{
    filter_by_property, load_compositions, load_dataset, screen_dataset, split_holdout, write_dataset_csv,
    write_formula_list, Comparison, ScreeningConfig, ScreeningOutcome,
};
use compgen_core::models::{
    generate_batch, load_checkpoint, load_checkpoint_as, save_checkpoint, screen_decodable as ae_screen,
    train_autoencoder, train_wgan_with, Architecture, ArchitectureFile, AutoencoderConfig, CriticConfig,
    GeneratorConfig, ModelKind, TrainConfig, TrainHistory,
};
use compgen_core::validity::classify_batch;

use crate::manifest::RunManifest;
use crate::*;

fn table(common: &Common) -> Result<ElementTable> {
    match &common.elements {
        Some(p) => ElementTable::load(p).with_context(|| format!("loading element data {}", p.display())),
        None => Ok(ElementTable::bundled()),
    }
}

fn element_inputs(m: &mut RunManifest, common: &Common) -> Result<()> {
    if let Some(p) = &common.elements {
        m.input(p)?;
    }
    Ok(())
}

fn out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn parent_dir(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => out_dir(p),
        _ => Ok(()),
    }
}

/// Refuses to write over any input file.
fn guard(outputs: &[&Path], inputs: &[&Path]) -> Result<()> {
    for o in outputs {
        let Ok(o) = fs::canonicalize(o) else { continue };
        for i in inputs {
            if fs::canonicalize(i).is_ok_and(|i| i == o) {
                bail!("output {} would overwrite an input", o.display());
            }
        }
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_formulas(path: &Path, items: &[Composition]) -> Result<()> {
    write_formula_list(items, create(path)?).with_context(|| format!("writing {}", path.display()))
}

fn read_compositions(path: &Path) -> Result<Vec<Composition>> {
    load_compositions(path).with_context(|| format!("reading {}", path.display()))
}

fn resolve_vocab(symbols: &[String], model: Option<&Path>) -> Result<ElementVocabulary> {
    if let Some(m) = model {
        return Ok(load_checkpoint(m)
            .with_context(|| format!("loading {}", m.display()))?
            .vocabulary);
    }
    let mut elements = Vec::new();
    for s in symbols {
        elements.push(s.trim().parse().map_err(|e| anyhow!("vocabulary: {e}"))?);
    }
    let v = ElementVocabulary::from_unordered(elements);
    if !v.is_usable() {
        bail!("empty vocabulary");
    }
    Ok(v)
}

/// Preset name or architecture file, for (generator, critic).
fn resolve_gan_arch(arch: &str) -> Result<(Architecture, Architecture)> {
    if let Some(a) = Architecture::from_name(arch) {
        return Ok((a.clone(), a));
    }
    let file = ArchitectureFile::load(arch).with_context(|| format!("architecture {arch}"))?;
    let g = file
        .generator
        .ok_or_else(|| anyhow!("architecture file {arch} has no generator"))?;
    let c = file
        .critic
        .ok_or_else(|| anyhow!("architecture file {arch} has no critic"))?;
    Ok((Architecture::Custom(g), Architecture::Custom(c)))
}

fn resolve_ae_arch(arch: &str) -> Result<Architecture> {
    if let Some(a) = Architecture::from_name(arch) {
        return Ok(a);
    }
    let file = ArchitectureFile::load(arch).with_context(|| format!("architecture {arch}"))?;
    Ok(Architecture::Custom(file.autoencoder.ok_or_else(|| {
        anyhow!("architecture file {arch} has no autoencoder")
    })?))
}

fn arch_input(m: &mut RunManifest, arch: &str) -> Result<()> {
    if Architecture::from_name(arch).is_none() {
        m.input(Path::new(arch))?;
    }
    Ok(())
}

fn parse_filter(text: &str) -> Result<(String, Comparison, f64)> {
    for (op, cmp) in [
        (">=", Comparison::Ge),
        ("<=", Comparison::Le),
        (">", Comparison::Gt),
        ("<", Comparison::Lt),
        ("=", Comparison::Eq),
    ] {
        if let Some((name, value)) = text.split_once(op) {
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| anyhow!("filter value `{value}` is not a number"))?;
            return Ok((name.trim().to_string(), cmp, v));
        }
    }
    bail!("filter `{text}` must look like NAME>VALUE")
}

pub fn ingest(a: IngestArgs) -> Result<()> {
    guard(&[&a.out], &[&a.input])?;
    let ds = load_dataset(&a.input).with_context(|| format!("loading {}", a.input.display()))?;
    let outcome = if a.screen == "none" {
        ScreeningOutcome {
            survivors: ds.records.clone(),
            ..ScreeningOutcome::default()
        }
    } else {
        let mut cfg =
            ScreeningConfig::profile(&a.screen).ok_or_else(|| anyhow!("unknown screening profile {}", a.screen))?;
        cfg.dedup = !a.no_dedup;
        screen_dataset(&ds.records, &cfg)?
    };
    let (survivors, property) = match &a.filter {
        Some(f) => {
            let (name, cmp, v) = parse_filter(f)?;
            let r = filter_by_property(&outcome.survivors, &name, cmp, v);
            let summary = json!({"property": name, "kept": r.kept.len(), "missing": r.missing, "rejected": r.rejected});
            (r.kept, Some(summary))
        }
        None => (outcome.survivors.clone(), None),
    };
    out_dir(&a.out)?;
    let mut m = RunManifest::new(
        "ingest",
        None,
        json!({"screen": a.screen, "dedup": !a.no_dedup, "filter": a.filter}),
    );
    m.input(&a.input)?;
    element_inputs(&mut m, &a.common)?;
    let surv = a.out.join("survivors.csv");
    write_dataset_csv(&survivors, create(&surv)?)?;
    let quarantine = a.out.join("quarantine.json");
    write_json(&quarantine, &ds.quarantine)?;
    let report = a.out.join("screening.json");
    write_json(
        &report,
        &json!({
            "input_records": ds.records.len(),
            "quarantined": ds.quarantine.len(),
            "survivors": survivors.len(),
            "removed": outcome.removed,
            "removed_total": outcome.removed.total(),
            "energy_window": outcome.energy_window,
            "property_filter": property,
        }),
    )?;
    for p in [&surv, &quarantine, &report] {
        m.output(p);
    }
    m.write(&a.out)?;
    eprintln!(
        "{} records, {} quarantined, {} survive screening",
        ds.records.len(),
        ds.quarantine.len(),
        survivors.len()
    );
    Ok(())
}

fn is_dataset(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("csv" | "jsonl" | "ndjson")
    )
}

pub fn split(a: SplitArgs) -> Result<()> {
    out_dir(&a.out)?;
    let mut m = RunManifest::new("split", Some(a.seed), json!({"fraction": a.fraction}));
    m.input(&a.input)?;
    let (train, holdout) = if is_dataset(&a.input) {
        let ds = load_dataset(&a.input)?;
        if !ds.quarantine.is_empty() {
            bail!(
                "{} has {} unparseable rows; run ingest first",
                a.input.display(),
                ds.quarantine.len()
            );
        }
        let (t, h) = split_holdout(&ds.records, a.fraction, a.seed)?;
        let (tp, hp) = (a.out.join("train.csv"), a.out.join("holdout.csv"));
        guard(&[&tp, &hp], &[&a.input])?;
        write_dataset_csv(&t, create(&tp)?)?;
        write_dataset_csv(&h, create(&hp)?)?;
        (tp, hp)
    } else {
        let items = read_compositions(&a.input)?;
        let (t, h) = split_holdout(&items, a.fraction, a.seed)?;
        let (tp, hp) = (a.out.join("train.txt"), a.out.join("holdout.txt"));
        guard(&[&tp, &hp], &[&a.input])?;
        write_formulas(&tp, &t)?;
        write_formulas(&hp, &h)?;
        (tp, hp)
    };
    m.output(&train);
    m.output(&holdout);
    m.write(&a.out)?;
    Ok(())
}

fn write_history(path: &Path, h: &TrainHistory) -> Result<()> {
    let mut w = create(path)?;
    if h.loss_ae.is_empty() {
        writeln!(w, "epoch,loss_g,loss_d")?;
        for (i, (g, d)) in h.loss_g.iter().zip(&h.loss_d).enumerate() {
            writeln!(w, "{},{g},{d}", i + 1)?;
        }
    } else {
        writeln!(w, "epoch,loss_ae")?;
        for (i, l) in h.loss_ae.iter().enumerate() {
            writeln!(w, "{},{l}", i + 1)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Selection {
    epoch: usize,
    valid_fraction: f64,
    unique_fraction: f64,
    checkpoint: String,
}

pub fn train_gan(a: TrainGanArgs) -> Result<()> {
    let table = table(&a.common)?;
    let data = read_compositions(&a.data)?;
    let vocab = vocabulary_from_dataset(&data, &table)?;
    let (garch, carch) = resolve_gan_arch(&a.arch)?;
    let gcfg = GeneratorConfig {
        latent_dim: a.latent_dim,
        architecture: garch,
        seed: a.seed,
    };
    let ccfg = CriticConfig {
        architecture: carch,
        clip: a.clip,
        n_critic: a.n_critic,
    };
    let tcfg = TrainConfig {
        epochs: a.epochs,
        generator_lr: a.generator_lr,
        critic_lr: a.critic_lr,
        batch_size: a.batch_size,
        seed: a.seed,
        checkpoint_every: a.checkpoint_every,
    };
    out_dir(&a.out)?;
    guard(&[&a.out], &[&a.data])?;
    let mut m = RunManifest::new(
        "train-gan",
        Some(a.seed),
        json!({"arch": a.arch, "generator": gcfg, "critic": ccfg, "train": tcfg, "select_n": a.select_n,
               "vocabulary": vocab.symbols()}),
    );
    m.input(&a.data)?;
    arch_input(&mut m, &a.arch)?;
    element_inputs(&mut m, &a.common)?;

    let selections = Mutex::new(Vec::<Selection>::new());
    let failure = Mutex::new(None);
    let cadence = a.checkpoint_every.is_some();
    let outcome = train_wgan_with(&data, &vocab, &gcfg, &ccfg, &tcfg, |epoch, trainer| {
        if !cadence {
            return;
        }
        let ckpt = trainer.generator_checkpoint();
        let path = a.out.join(format!("generator-epoch{epoch:05}.ckpt"));
        let scored = (|| -> Result<Selection> {
            save_checkpoint(&ckpt, &path)?;
            let batch = generate_batch(&ckpt, a.select_n, a.seed, None)?;
            let verdicts = classify_batch(&batch.compositions, &table, a.common.workers);
            let valid = verdicts.iter().filter(|v| v.is_fully_valid()).count();
            let unique: BTreeSet<&Composition> = batch.compositions.iter().collect();
            let n = a.select_n.max(1) as f64;
            Ok(Selection {
                epoch,
                valid_fraction: valid as f64 / n,
                unique_fraction: unique.len() as f64 / n,
                checkpoint: path.display().to_string(),
            })
        })();
        match scored {
            Ok(s) => selections.lock().expect("lock").push(s),
            Err(e) => *failure.lock().expect("lock") = Some(e),
        }
    });
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e.context("scoring a cadence checkpoint"));
    }
    let outcome = match outcome {
        Ok(o) => o,
        Err(compgen_core::models::ModelError::NonFinite { epoch, last_good }) => {
            if let Some(ckpts) = last_good {
                for c in ckpts.iter() {
                    let name = format!("{}-last-good.ckpt", c.kind);
                    save_checkpoint(c, a.out.join(name))?;
                }
            }
            bail!(
                "training diverged at epoch {epoch}; last finite checkpoints saved in {}",
                a.out.display()
            );
        }
        Err(e) => return Err(e.into()),
    };

    let gpath = a.out.join("generator.ckpt");
    let cpath = a.out.join("critic.ckpt");
    let hpath = a.out.join("history.csv");
    save_checkpoint(&outcome.generator, &gpath)?;
    save_checkpoint(&outcome.critic, &cpath)?;
    write_history(&hpath, &outcome.history)?;
    for p in [&gpath, &cpath, &hpath] {
        m.output(p);
    }
    let selections = selections.into_inner().expect("lock");
    if !selections.is_empty() {
        // Highest fully-valid fraction; earliest epoch on ties.
        let best = selections
            .iter()
            .fold(None::<&Selection>, |b, s| match b {
                Some(b) if b.valid_fraction >= s.valid_fraction => Some(b),
                _ => Some(s),
            })
            .expect("non-empty");
        let bpath = a.out.join("generator-best.ckpt");
        fs::copy(&best.checkpoint, &bpath)?;
        let spath = a.out.join("selection.json");
        write_json(&spath, &json!({"best_epoch": best.epoch, "candidates": selections}))?;
        for s in &selections {
            m.output(Path::new(&s.checkpoint));
        }
        m.output(&bpath);
        m.output(&spath);
    }
    m.write(&a.out)?;
    Ok(())
}

pub fn train_ae(a: TrainAeArgs) -> Result<()> {
    let table = table(&a.common)?;
    let data = read_compositions(&a.data)?;
    let vocab = vocabulary_from_dataset(&data, &table)?;
    let cfg = AutoencoderConfig {
        architecture: resolve_ae_arch(&a.arch)?,
        code_dim: a.code_dim,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        seed: a.seed,
    };
    out_dir(&a.out)?;
    guard(&[&a.out], &[&a.data])?;
    let mut m = RunManifest::new(
        "train-ae",
        Some(a.seed),
        json!({"arch": a.arch, "autoencoder": cfg, "vocabulary": vocab.symbols()}),
    );
    m.input(&a.data)?;
    arch_input(&mut m, &a.arch)?;
    element_inputs(&mut m, &a.common)?;
    let out = train_autoencoder(&data, &vocab, &cfg)?;
    let ckpt = a.out.join("autoencoder.ckpt");
    let hist = a.out.join("history.csv");
    save_checkpoint(&out.checkpoint, &ckpt)?;
    write_history(&hist, &out.history)?;
    m.output(&ckpt);
    m.output(&hist);
    m.write(&a.out)?;
    Ok(())
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    guard(&[&a.out], &[&a.model])?;
    let ckpt =
        load_checkpoint_as(&a.model, ModelKind::Generator).with_context(|| format!("loading {}", a.model.display()))?;
    let batch = generate_batch(&ckpt, a.n, a.seed, a.threshold)?;
    parent_dir(&a.out)?;
    write_formulas(&a.out, &batch.compositions)?;
    let mut m = RunManifest::new(
        "generate",
        Some(a.seed),
        json!({"n": a.n, "threshold": a.threshold, "empty_decodes": batch.empty_decodes}),
    );
    m.input(&a.model)?;
    m.output(&a.out);
    m.write(&a.out)?;
    eprintln!("{} samples, {} decoded empty", a.n, batch.empty_decodes);
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let table = table(&a.common)?;
    let mut inputs: Vec<&Path> = vec![&a.gen];
    inputs.extend(a.train.as_deref());
    inputs.extend(a.holdout.as_deref());
    let external: Vec<(String, PathBuf)> = a
        .external
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(n, p)| (n.to_string(), PathBuf::from(p)))
                .ok_or_else(|| anyhow!("--external expects NAME=PATH, got `{s}`"))
        })
        .collect::<Result<_>>()?;
    inputs.extend(external.iter().map(|(_, p)| p.as_path()));
    guard(&[&a.out], &inputs)?;

    let gen = read_compositions(&a.gen)?;
    let train = a.train.as_deref().map(read_compositions).transpose()?;
    let holdout = a.holdout.as_deref().map(read_compositions).transpose()?;
    let ext_sets: Vec<(String, Vec<Composition>)> = external
        .iter()
        .map(|(n, p)| Ok((n.clone(), read_compositions(p)?)))
        .collect::<Result<_>>()?;
    let report = build_report(
        &EvalInputs {
            generated: &gen,
            training: train.as_deref(),
            holdout: holdout.as_deref(),
            external: ext_sets.iter().map(|(n, v)| (n.clone(), v.as_slice())).collect(),
            baseline_valid_fraction: a.baseline,
            step: a.step,
            workers: a.common.workers,
        },
        &table,
    )?;
    parent_dir(&a.out)?;
    fs::write(&a.out, report.to_json()? + "\n")?;
    let mut m = RunManifest::new(
        "evaluate",
        None,
        json!({"step": a.step, "baseline": a.baseline, "external": a.external}),
    );
    for p in &inputs {
        m.input(p)?;
    }
    element_inputs(&mut m, &a.common)?;
    m.output(&a.out);
    if let Some(c) = &a.curve_csv {
        parent_dir(c)?;
        write_curve_csv(&report.uniqueness, create(c)?)?;
        m.output(c);
    }
    m.write(&a.out)?;
    Ok(())
}

pub fn enumerate(a: EnumerateArgs) -> Result<()> {
    let table = table(&a.common)?;
    let vocabulary = match &a.data {
        Some(p) => vocabulary_from_dataset(&read_compositions(p)?, &table)?,
        None => resolve_vocab(&a.vocab, None)?,
    };
    let spec = EnumSpec {
        vocabulary,
        arities: a.arity.iter().copied().collect(),
        max_count: a.max_count,
        filter: match a.filter {
            FilterArg::None => FilterMode::None,
            FilterArg::ChargeNeutral => FilterMode::ChargeNeutral,
            FilterArg::FullyValid => FilterMode::FullyValid,
        },
    };
    parent_dir(&a.out)?;
    let mut m = RunManifest::new(
        "enumerate",
        a.sample.map(|_| a.seed),
        json!({"vocabulary": spec.vocabulary.symbols(), "arities": spec.arities, "max_count": spec.max_count,
               "filter": spec.filter, "sample": a.sample}),
    );
    if let Some(p) = &a.data {
        m.input(p)?;
    }
    element_inputs(&mut m, &a.common)?;

    if let Some(n) = a.sample {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let samples = sample_uniform(&spec, n, &mut rng)?;
        let verdicts = classify_batch(&samples, &table, a.common.workers);
        let cn = verdicts.iter().filter(|v| v.charge_neutral).count();
        let valid = verdicts.iter().filter(|v| v.is_fully_valid()).count();
        write_json(
            &a.out,
            &json!({"samples": n, "charge_neutral": cn, "fully_valid": valid,
                    "valid_fraction": if n == 0 { 0.0 } else { valid as f64 / n as f64 }}),
        )?;
        if let Some(e) = &a.emit {
            parent_dir(e)?;
            write_formulas(e, &samples)?;
            m.output(e);
        }
    } else {
        let writer = match &a.emit {
            Some(e) => {
                parent_dir(e)?;
                Some(Mutex::new(create(e)?))
            }
            None => None,
        };
        let stats = enumerate_ordered(
            &spec,
            &table,
            EnumOptions {
                workers: a.common.workers,
                cancel: None,
            },
            |c| {
                if let Some(w) = &writer {
                    let _ = writeln!(w.lock().expect("lock"), "{}", format_formula(c));
                }
            },
        )?;
        if let Some(w) = writer {
            w.into_inner().expect("lock").flush()?;
            m.output(a.emit.as_deref().expect("emit path"));
        }
        write_json(&a.out, &stats)?;
    }
    m.output(&a.out);
    m.write(&a.out)?;
    Ok(())
}

pub fn screen_decodable(a: ScreenArgs) -> Result<()> {
    let ckpt = load_checkpoint_as(&a.model, ModelKind::Autoencoder)
        .with_context(|| format!("loading {}", a.model.display()))?;
    let candidates = read_compositions(&a.input)?;
    let part = ae_screen(&ckpt, &candidates, a.threshold)?;
    out_dir(&a.out)?;
    let (d, n, s) = (
        a.out.join("decodable.txt"),
        a.out.join("non_decodable.txt"),
        a.out.join("summary.json"),
    );
    guard(&[&d, &n, &s], &[&a.input, &a.model])?;
    write_formulas(&d, &part.decodable)?;
    write_formulas(&n, &part.non_decodable)?;
    write_json(
        &s,
        &json!({"candidates": candidates.len(), "decodable": part.decodable.len(),
                "non_decodable": part.non_decodable.len(), "decodable_fraction": part.decodable_fraction()}),
    )?;
    let mut m = RunManifest::new("screen-decodable", None, json!({"threshold": a.threshold}));
    m.input(&a.model)?;
    m.input(&a.input)?;
    for p in [&d, &n, &s] {
        m.output(p);
    }
    m.write(&a.out)?;
    Ok(())
}

fn codec_manifest(
    name: &str,
    a_in: &Path,
    a_out: &Path,
    model: Option<&Path>,
    vocab: &ElementVocabulary,
) -> Result<()> {
    let mut m = RunManifest::new(name, None, json!({"vocabulary": vocab.symbols()}));
    m.input(a_in)?;
    if let Some(p) = model {
        m.input(p)?;
    }
    m.output(a_out);
    m.write(a_out)?;
    Ok(())
}

pub fn encode(a: EncodeArgs) -> Result<()> {
    guard(&[&a.out], &[&a.input])?;
    let vocab = resolve_vocab(&a.vocab, a.model.as_deref())?;
    let items = read_compositions(&a.input)?;
    parent_dir(&a.out)?;
    let mut w = create(&a.out)?;
    for c in &items {
        let mtx = encode_composition(c, &vocab).with_context(|| format!("encoding {}", format_formula(c)))?;
        let rows: Vec<&[u8]> = mtx.cells().chunks(vocab.len()).collect();
        writeln!(w, "{}", json!({"formula": format_formula(c), "matrix": rows}))?;
    }
    w.flush()?;
    codec_manifest("encode", &a.input, &a.out, a.model.as_deref(), &vocab)
}

pub fn decode(a: DecodeArgs) -> Result<()> {
    guard(&[&a.out], &[&a.input])?;
    let vocab = resolve_vocab(&a.vocab, a.model.as_deref())?;
    let threshold = a.threshold.unwrap_or(compgen_core::composition::DEFAULT_THRESHOLD);
    let reader = BufReader::new(File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?);
    let mut out = Vec::new();
    let mut empty = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(&line).with_context(|| format!("line {}", i + 1))?;
        let values: Vec<f64> = match v.get("matrix").or_else(|| v.get("values")).unwrap_or(&v) {
            serde_json::Value::Array(items) => {
                let mut flat = Vec::new();
                for item in items {
                    match item {
                        serde_json::Value::Array(row) => flat.extend(row.iter().filter_map(|x| x.as_f64())),
                        x => flat.extend(x.as_f64()),
                    }
                }
                flat
            }
            _ => bail!("line {}: expected a matrix", i + 1),
        };
        if values.len() != ROWS * vocab.len() {
            bail!(
                "line {}: {} values, expected {}",
                i + 1,
                values.len(),
                ROWS * vocab.len()
            );
        }
        let c = decode_values(&values, &vocab, threshold)?;
        if c.is_empty() {
            empty += 1;
        } else {
            out.push(c);
        }
    }
    parent_dir(&a.out)?;
    write_formulas(&a.out, &out)?;
    if empty > 0 {
        eprintln!("{empty} matrices decoded to nothing and were skipped");
    }
    codec_manifest("decode", &a.input, &a.out, a.model.as_deref(), &vocab)
}

pub fn export_vectors(a: EncodeArgs) -> Result<()> {
    guard(&[&a.out], &[&a.input])?;
    let vocab = resolve_vocab(&a.vocab, a.model.as_deref())?;
    let items = read_compositions(&a.input)?;
    parent_dir(&a.out)?;
    let mut w = create(&a.out)?;
    let mut header = vec!["formula".to_string()];
    for row in 0..ROWS {
        for sym in vocab.symbols() {
            header.push(format!("{sym}_{}", row + 1));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for c in &items {
        let mtx = encode_composition(c, &vocab).with_context(|| format!("encoding {}", format_formula(c)))?;
        let cells: Vec<String> = mtx.cells().iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{}", format_formula(c), cells.join(","))?;
    }
    w.flush()?;
    codec_manifest("export-vectors", &a.input, &a.out, a.model.as_deref(), &vocab)
}
