use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use snoregan::audio::{detect_events_report, read_manifest, read_wav, write_codebook_csv};
use snoregan::augment::{
    draw_balanced, judge_pool, merge, oversample_replicate, smote, synthesize_pool, train_ensemble, write_pool,
    EnsembleConfig, Verdict,
};
use snoregan::classifiers::{svm_predict, train_gru_classifier, train_svm, GruClassifierConfig, SvmConfig};
use snoregan::data::{class_counts, DataKind, FeatureRecord, Sample};
use snoregan::experiments::{
    self, derive_seed, export_curve, export_plot, export_report, gen_synthetic_corpus, pca_2d, prepare,
    render_scatter, run_experiment, sweep_augmentation, toy_mixture, uar, Corpus, EvalReport, FeatureSystem,
    FeatureTransformer, PlotSeries, ToySpec,
};
use snoregan::gan::{train, AlternationPolicy, GanMode, ScganConfig, ScganModel, TrainTrace};
use snoregan::io::{read_feature_file, write_feature_file};

use super::{
    require_file, AlternationArgs, AugmentArgs, CliError, CliResult, CodebookArgs, Context, EvalArgs, FeaturesArgs,
    GenCorpusArgs, ManifestArgs, ReportArgs, SweepArgs, SynthArgs, TrainClfArgs, TrainGanArgs,
};

const STREAM_AUGMENT: u64 = 0xA06;
const STREAM_SYNTH: u64 = 0x5E7;

fn feature_file_name(stem: &str, records: &[FeatureRecord]) -> String {
    match records.first().map(|r| r.payload.kind()) {
        Some(DataKind::Sequence) => format!("{stem}.snsq"),
        _ => format!("{stem}.csv"),
    }
}

fn load_features(path: &Path) -> CliResult<Vec<FeatureRecord>> {
    require_file(path, "features")?;
    let records = read_feature_file(path)?;
    if records.is_empty() {
        return Err(CliError::Validation(format!("features: {} holds no records", path.display())));
    }
    Ok(records)
}

fn num_classes(ctx: &Context, records: &[FeatureRecord]) -> usize {
    let seen = records.iter().map(|r| r.label + 1).max().unwrap_or(0);
    ctx.config.class_names.as_ref().map_or(seen, |n| n.len().max(seen))
}

fn load_models(paths: &[PathBuf]) -> CliResult<Vec<ScganModel>> {
    if paths.is_empty() {
        return Err(CliError::Validation("missing field `model` (flag --model)".into()));
    }
    paths
        .iter()
        .map(|p| {
            require_file(p, "model")?;
            Ok(ScganModel::load_json(p)?)
        })
        .collect()
}

fn load_corpus(ctx: &Context, manifest: &Path) -> CliResult<Corpus> {
    let corpus = Corpus::load(manifest, ctx.config.class_names.clone(), &ctx.config.events)?;
    for w in &corpus.warnings {
        eprintln!("warning: {w}");
    }
    Ok(corpus)
}

fn write_trace(path: &Path, trace: &TrainTrace) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(snoregan::Error::from)?;
    for r in &trace.records {
        w.serialize(r).map_err(snoregan::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn gen_corpus(ctx: &mut Context, a: &GenCorpusArgs) -> CliResult<()> {
    if let Some(spec) = &a.per_class {
        let counts: Vec<usize> = spec
            .split(',')
            .map(|v| v.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Validation(format!("per_class: {e}")))?;
        let [tr, dev, te] = counts[..] else {
            return Err(CliError::Validation("per_class needs TRAIN,DEVEL,TEST".into()));
        };
        ctx.config.corpus.counts = vec![[tr, dev, te]; ctx.config.corpus.classes.len()];
    }
    ctx.echo("gen-corpus", a)?;
    let entries = gen_synthetic_corpus(&ctx.config.corpus, &ctx.out)?;
    println!("wrote {} clips and manifest.csv to {}", entries.len(), ctx.out.display());
    Ok(())
}

pub fn segment(ctx: &mut Context, a: &ManifestArgs) -> CliResult<()> {
    let manifest = ctx.manifest(&a.manifest)?;
    ctx.echo("segment", a)?;
    #[derive(Serialize)]
    struct Row<'a> {
        file: &'a str,
        label: &'a str,
        partition: &'a str,
        event: usize,
        start: usize,
        end: usize,
        padded_start: bool,
        padded_end: bool,
    }
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut w = csv::Writer::from_path(ctx.path("segments.csv")).map_err(snoregan::Error::from)?;
    let mut total = 0;
    let mut warnings: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for e in read_manifest(&manifest)? {
        let clip = read_wav(base.join(&e.file))?;
        let report = detect_events_report(&clip, &ctx.config.events);
        for warning in report.warnings {
            warnings.entry(warning).or_default().push(e.file.clone());
        }
        for (i, s) in report.events.iter().enumerate() {
            w.serialize(Row {
                file: &e.file,
                label: &e.label,
                partition: e.partition.as_str(),
                event: i,
                start: s.start,
                end: s.end,
                padded_start: s.padded_start,
                padded_end: s.padded_end,
            })
            .map_err(snoregan::Error::from)?;
        }
        total += report.events.len();
    }
    w.flush()?;
    for (warning, files) in &warnings {
        match &files[..] {
            [one] => eprintln!("warning: {one}: {warning}"),
            [first, ..] => eprintln!("warning: {first} and {} more clips: {warning}", files.len() - 1),
            [] => {}
        }
    }
    println!("{total} events");
    Ok(())
}

pub fn features(ctx: &mut Context, a: &FeaturesArgs) -> CliResult<()> {
    let manifest = ctx.manifest(&a.manifest)?;
    if let Some(system) = a.system {
        ctx.config.run.feature_system = system;
    }
    ctx.echo("features", a)?;
    let corpus = load_corpus(ctx, &manifest)?;
    let prep = prepare(&ctx.config.run, &corpus)?;
    let f = &prep.features;
    for (name, set) in [("train", &f.train), ("devel", &f.devel), ("test", &f.test)] {
        write_feature_file(ctx.path(&feature_file_name(name, set)), set)?;
    }
    if let FeatureTransformer::Boaw { codebook, .. } = &f.transformer {
        write_codebook_csv(ctx.path("codebook.csv"), codebook)?;
    }
    fs::write(ctx.path("classes.txt"), corpus.class_names.join("\n") + "\n")?;
    println!(
        "{}: {} train, {} devel, {} test records",
        f.system.as_str(),
        f.train.len(),
        f.devel.len(),
        f.test.len()
    );
    Ok(())
}

pub fn codebook(ctx: &mut Context, a: &CodebookArgs) -> CliResult<()> {
    let manifest = ctx.manifest(&a.manifest)?;
    let fc = &mut ctx.config.run.features;
    if let Some(size) = a.size {
        fc.codebook_size = size;
    }
    if let Some(method) = a.method {
        fc.codebook_method = method;
    }
    ctx.config.run.feature_system = FeatureSystem::BoawSvm;
    ctx.echo("codebook", a)?;
    let corpus = load_corpus(ctx, &manifest)?;
    let prep = prepare(&ctx.config.run, &corpus)?;
    let FeatureTransformer::Boaw { codebook, .. } = &prep.features.transformer else {
        unreachable!("bag-of-audio-words system always fits a codebook")
    };
    write_codebook_csv(ctx.path("codebook.csv"), codebook)?;
    println!("codebook {} x {} ({})", codebook.size(), codebook.dim(), codebook.method.as_str());
    Ok(())
}

fn gan_template(ctx: &Context, records: &[FeatureRecord], mode: GanMode) -> ScganConfig {
    let first = &records[0].payload;
    let seq = first.kind() == DataKind::Sequence;
    ScganConfig {
        mode,
        num_classes: num_classes(ctx, records),
        data_kind: first.kind(),
        sequence_length: match first {
            Sample::Sequence(m) if seq => Some(m.rows()),
            _ => None,
        },
        hidden_size: ctx.config.run.mono_hidden,
        ..ctx.config.run.gan.clone()
    }
}

pub fn train_gan(ctx: &mut Context, a: &TrainGanArgs) -> CliResult<()> {
    if let Some(n) = a.iterations {
        ctx.config.run.gan.max_iterations = n;
    }
    if let Some(mode) = a.mode {
        ctx.config.run.gan.mode = mode;
    }
    ctx.echo("train-gan", a)?;
    let records = load_features(&a.features)?;
    let template = gan_template(ctx, &records, ctx.config.run.gan.mode);
    if a.ensemble {
        let cfg = EnsembleConfig {
            hidden_sizes: ctx.config.run.ensemble_sizes.clone(),
            template,
            seeds: None,
        };
        let outcome = train_ensemble(&cfg, &records)?;
        for f in &outcome.failures {
            eprintln!("warning: {f}");
        }
        for m in &outcome.members {
            m.model.save_json(ctx.path(&format!("member_{}.json", m.id)))?;
            write_trace(&ctx.path(&format!("trace_{}.csv", m.id)), &m.trace)?;
        }
        if outcome.members.is_empty() {
            return Err(CliError::Runtime(snoregan::Error::EmptyInput("ensemble members")));
        }
        println!("trained {} of {} members", outcome.members.len(), cfg.hidden_sizes.len());
    } else {
        let (model, trace) = train(&template, &records)?;
        model.save_json(ctx.path("model.json"))?;
        write_trace(&ctx.path("trace.csv"), &trace)?;
        println!("trained {} steps over {} iterations", trace.records.len(), trace.iterations);
    }
    Ok(())
}

pub fn synth(ctx: &mut Context, a: &SynthArgs) -> CliResult<()> {
    ctx.echo("synth", a)?;
    let models = load_models(&a.models)?;
    let refs: Vec<&ScganModel> = models.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.config.run.seed, STREAM_SYNTH));
    let pool = synthesize_pool(&refs, a.per_class, &mut rng)?;
    let mut judged = judge_pool(&pool, &refs)?;
    let kept = judged.entries.iter().filter(|e| e.verdict == Verdict::Kept).count();
    if a.filter {
        judged.entries.retain(|e| e.verdict == Verdict::Kept);
    }
    let name = match refs[0].config.data_kind {
        DataKind::Sequence => "pool.snsq",
        DataKind::StaticVector => "pool.csv",
    };
    write_pool(ctx.path(name), &judged)?;
    println!("{kept} of {} samples recognized", pool.len());
    Ok(())
}

pub fn augment(ctx: &mut Context, a: &AugmentArgs) -> CliResult<()> {
    if let Some(m) = a.m {
        ctx.config.run.m_per_class = m;
    }
    ctx.echo("augment", a)?;
    let records = load_features(&a.features)?;
    let k = num_classes(ctx, &records);
    let run = &ctx.config.run;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run.seed, STREAM_AUGMENT));
    let mut set = match a.method.as_str() {
        "gan" => {
            let models = load_models(&a.models)?;
            let refs: Vec<&ScganModel> = models.iter().collect();
            let extra = draw_balanced(&refs, run.m_per_class, run.pool_factor, run.pool_rounds, &mut rng)?;
            merge(&records, &extra)?
        }
        "smote" => {
            let extra: Vec<FeatureRecord> = smote(&records, k, run.smote_k, None, &mut rng)?
                .into_iter()
                .map(|s| s.record)
                .collect();
            merge(&records, &extra)?
        }
        "replicate" => records.clone(),
        other => {
            return Err(CliError::Validation(format!(
                "method: unknown {other:?} (expected gan, smote or replicate)"
            )))
        }
    };
    if run.replicate || a.method == "replicate" {
        set = oversample_replicate(&set, k, &mut rng)?;
    }
    write_feature_file(ctx.path(&feature_file_name("augmented", &set)), &set)?;
    println!("{} records, per class {:?}", set.len(), class_counts(&set, k));
    Ok(())
}

pub fn train_clf(ctx: &mut Context, a: &TrainClfArgs) -> CliResult<()> {
    if let Some(c) = a.c {
        ctx.config.run.svm_c = Some(c);
    }
    ctx.echo("train-clf", a)?;
    let records = load_features(&a.features)?;
    let k = num_classes(ctx, &records);
    let run = &ctx.config.run;
    let labels: Vec<usize> = records.iter().map(|r| r.label).collect();
    let predicted: Vec<usize> = match records[0].payload.kind() {
        DataKind::StaticVector => {
            let x: Vec<Vec<f64>> = records
                .iter()
                .map(|r| r.payload.as_static().map(<[f64]>::to_vec))
                .collect::<Result<_, _>>()?;
            let cfg = SvmConfig {
                c: run.svm_c.unwrap_or(run.feature_system.default_svm_c()),
                max_epochs: run.svm_max_epochs,
                tolerance: run.svm_tolerance,
                seed: run.seed,
            };
            let fit = train_svm(&x, &labels, k, &cfg)?;
            write_json(&ctx.path("svm.json"), &fit.model)?;
            x.iter().map(|v| svm_predict(&fit.model, v).map(|p| p.class)).collect::<Result<_, _>>()?
        }
        DataKind::Sequence => {
            let windows = records
                .iter()
                .map(|r| r.payload.as_sequence().cloned())
                .collect::<Result<Vec<_>, _>>()?;
            let cfg = GruClassifierConfig { seed: run.seed, ..run.gru };
            let model = train_gru_classifier(&windows, &labels, k, &cfg)?;
            write_json(&ctx.path("gru.json"), &model)?;
            windows.iter().map(|w| model.predict(w).map(|p| p.class)).collect::<Result<_, _>>()?
        }
    };
    println!("training UAR {:.4}", uar(&predicted, &labels, k)?);
    Ok(())
}

fn print_report(r: &EvalReport) {
    println!(
        "{} + {} (m={}): dev {:.4} ± {:.4}, test {:.4} ± {:.4} over {} runs",
        r.config.feature_system.as_str(),
        r.config.augmentation.as_str(),
        r.m_per_class,
        r.dev_mean,
        r.dev_sd,
        r.test_mean,
        r.test_sd,
        r.runs.len()
    );
}

fn apply_eval_flags(
    ctx: &mut Context,
    system: Option<FeatureSystem>,
    augmentation: Option<experiments::Augmentation>,
    runs: Option<usize>,
) {
    let run = &mut ctx.config.run;
    if let Some(s) = system {
        run.feature_system = s;
    }
    if let Some(aug) = augmentation {
        run.augmentation = aug;
    }
    if let Some(n) = runs {
        run.runs = n;
    }
}

pub fn eval(ctx: &mut Context, a: &EvalArgs) -> CliResult<()> {
    let manifest = ctx.manifest(&a.manifest)?;
    apply_eval_flags(ctx, a.system, a.augmentation, a.runs);
    if let Some(m) = a.m {
        ctx.config.run.m_per_class = m;
    }
    ctx.config.run.validate()?;
    ctx.echo("eval", a)?;
    let corpus = load_corpus(ctx, &manifest)?;
    let report = run_experiment(&ctx.config.run, &corpus)?;
    export_report(std::slice::from_ref(&report), ctx.path("report.csv"))?;
    write_json(&ctx.path("report.json"), &report)?;
    print_report(&report);
    Ok(())
}

pub fn sweep(ctx: &mut Context, a: &SweepArgs) -> CliResult<()> {
    let manifest = ctx.manifest(&a.manifest)?;
    apply_eval_flags(ctx, a.system, a.augmentation, a.runs);
    if let Some(ms) = &a.m {
        ctx.config.sweep_m = ms.clone();
    }
    if ctx.config.run.augmentation == experiments::Augmentation::None {
        ctx.config.run.augmentation = experiments::Augmentation::ScganMono;
    }
    ctx.config.run.validate()?;
    let ms = ctx.config.sweep_m.clone();
    if ms.is_empty() || ms.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::Validation("m: values must be non-empty and ascending".into()));
    }
    ctx.echo("sweep", a)?;
    let corpus = load_corpus(ctx, &manifest)?;
    let (points, reports) = sweep_augmentation(&ctx.config.run, &corpus, &ms)?;
    export_curve(&points, ctx.path("curve.csv"))?;
    export_report(&reports, ctx.path("report.csv"))?;
    write_json(&ctx.path("reports.json"), &reports)?;
    let label = ctx.config.run.augmentation.as_str();
    export_plot(
        &[PlotSeries::dev_curve(format!("{label} (devel)"), &points)],
        &format!("{} UAR vs generated samples", ctx.config.run.feature_system.as_str()),
        "generated samples per class",
        "UAR",
        ctx.path("curve.svg"),
    )?;
    for r in &reports {
        print_report(r);
    }
    Ok(())
}

pub fn compare_alternation(ctx: &mut Context, a: &AlternationArgs) -> CliResult<()> {
    let settings = &mut ctx.config.alternation;
    if let Some(p) = a.pairs {
        settings.pairs = p;
    }
    if let Some(n) = a.iterations {
        settings.gan.max_iterations = n;
    }
    if settings.pairs == 0 {
        return Err(CliError::Validation("pairs must be at least 1".into()));
    }
    ctx.echo("compare-alternation", a)?;
    let settings = ctx.config.alternation.clone();
    let fixed = AlternationPolicy::fixed(settings.fixed_epochs);
    #[derive(Serialize)]
    struct Row {
        pair: usize,
        policy: &'static str,
        steps: usize,
        generator_sd: f64,
        discriminator_sd: f64,
        combined_sd: f64,
        generator_window_sd: f64,
        discriminator_window_sd: f64,
    }
    let mut w = csv::Writer::from_path(ctx.path("alternation.csv")).map_err(snoregan::Error::from)?;
    let mut wins = 0;
    for pair in 0..settings.pairs {
        let toy = toy_mixture(&ToySpec {
            seed: ctx.config.toy.seed + pair as u64,
            ..ctx.config.toy
        })?;
        let template = ScganConfig {
            num_classes: ctx.config.toy.num_classes,
            seed: settings.gan.seed + pair as u64,
            ..settings.gan.clone()
        };
        let cmp = experiments::compare_alternation(&template, &AlternationPolicy::dynamic_default(), &fixed, &toy.records)?;
        for (policy, s) in [("dynamic", &cmp.dynamic), ("fixed", &cmp.fixed)] {
            w.serialize(Row {
                pair,
                policy,
                steps: s.steps,
                generator_sd: s.generator_sd,
                discriminator_sd: s.discriminator_sd,
                combined_sd: s.combined_sd(),
                generator_window_sd: s.generator_window_sd,
                discriminator_window_sd: s.discriminator_window_sd,
            })
            .map_err(snoregan::Error::from)?;
        }
        if cmp.dynamic.combined_sd() < cmp.fixed.combined_sd() {
            wins += 1;
        }
        if pair == 0 {
            write_trace(&ctx.path("trace_dynamic.csv"), &cmp.dynamic_trace)?;
            write_trace(&ctx.path("trace_fixed.csv"), &cmp.fixed_trace)?;
            let series = |label: &str, losses: Vec<f64>| PlotSeries {
                label: label.to_string(),
                points: losses.iter().enumerate().map(|(i, &l)| (i as f64, l, 0.0)).collect(),
            };
            export_plot(
                &[
                    series("dynamic G", cmp.dynamic_trace.generator_losses()),
                    series("dynamic D", cmp.dynamic_trace.discriminator_losses()),
                    series("fixed G", cmp.fixed_trace.generator_losses()),
                    series("fixed D", cmp.fixed_trace.discriminator_losses()),
                ],
                "training losses",
                "step",
                "loss",
                ctx.path("losses.svg"),
            )?;
        }
    }
    w.flush()?;
    println!("dynamic alternation smoother in {wins} of {} pairs", settings.pairs);
    Ok(())
}

fn load_reports(path: &Path) -> CliResult<Vec<EvalReport>> {
    require_file(path, "input")?;
    let text = fs::read_to_string(path)?;
    if let Ok(many) = serde_json::from_str::<Vec<EvalReport>>(&text) {
        return Ok(many);
    }
    serde_json::from_str::<EvalReport>(&text)
        .map(|r| vec![r])
        .map_err(|e| CliError::Validation(format!("input {}: {e}", path.display())))
}

pub fn report(ctx: &mut Context, a: &ReportArgs) -> CliResult<()> {
    if a.inputs.is_empty() && a.features.is_none() {
        return Err(CliError::Validation("missing field `input` or `features`".into()));
    }
    ctx.echo("report", a)?;
    if !a.inputs.is_empty() {
        let mut reports = Vec::new();
        for p in &a.inputs {
            reports.extend(load_reports(p)?);
        }
        export_report(&reports, ctx.path("report.csv"))?;
        let mut series: Vec<PlotSeries> = Vec::new();
        for r in &reports {
            let label = format!("{} + {}", r.config.feature_system.as_str(), r.config.augmentation.as_str());
            let point = (r.m_per_class as f64, r.dev_mean, r.dev_sd);
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push(point),
                None => series.push(PlotSeries {
                    label,
                    points: vec![point],
                }),
            }
        }
        for s in &mut series {
            s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        export_plot(&series, "development UAR", "generated samples per class", "UAR", ctx.path("uar.svg"))?;
        reports.iter().for_each(print_report);
    }
    if let Some(path) = &a.features {
        let records = load_features(path)?;
        let rows: Vec<Vec<f64>> = records
            .iter()
            .map(|r| match &r.payload {
                Sample::Static(v) => v.clone(),
                Sample::Sequence(m) => {
                    let mut mean = vec![0.0; m.cols()];
                    for row in m.row_iter() {
                        for (a, b) in mean.iter_mut().zip(row) {
                            *a += b / m.rows() as f64;
                        }
                    }
                    mean
                }
            })
            .collect();
        let pca = pca_2d(&rows)?;
        let points: Vec<(usize, [f64; 2])> = records.iter().map(|r| r.label).zip(pca.projected.iter().copied()).collect();
        let k = num_classes(ctx, &records);
        let names = ctx
            .config
            .class_names
            .clone()
            .unwrap_or_else(|| (0..k).map(|i| format!("class {i}")).collect());
        fs::write(ctx.path("pca.svg"), render_scatter(&points, &names, "principal components"))?;
        let mut w = csv::Writer::from_path(ctx.path("pca.csv")).map_err(snoregan::Error::from)?;
        w.write_record(["label", "provenance", "pc1", "pc2"]).map_err(snoregan::Error::from)?;
        for (r, p) in records.iter().zip(&pca.projected) {
            w.write_record([
                r.label.to_string(),
                r.provenance.as_str().to_string(),
                p[0].to_string(),
                p[1].to_string(),
            ])
            .map_err(snoregan::Error::from)?;
        }
        w.flush()?;
        println!("projected {} records", records.len());
    }
    Ok(())
}
