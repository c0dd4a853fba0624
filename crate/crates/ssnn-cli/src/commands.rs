use std::path::Path;

use serde::Serialize;
use ssnn::benchmark::{
    build_datasets, grid_search, monte_carlo, rmse, HyperGrids, SisoTruth,
};
use ssnn::lm::train;
use ssnn::objectives::{Dataset, Mode, RegSet};
use ssnn::{AugmentedModel64, Signal};

use crate::artifact::{ModelArtifact, TrainingMeta};
use crate::config::RunConfig;
use crate::csv;
use crate::error::{CliError, Result};

pub fn parse_methods(name: &str) -> Result<Vec<Mode>> {
    match name {
        "baseline" => Ok(vec![Mode::Baseline]),
        "classical" => Ok(vec![Mode::Classical]),
        "wpgnn" => Ok(vec![Mode::Wpgnn]),
        "all" => Ok(vec![Mode::Baseline, Mode::Classical, Mode::Wpgnn]),
        other => Err(CliError::Config(format!(
            "unknown method '{other}' (expected baseline, classical, wpgnn or all)"
        ))),
    }
}

fn ensure_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn scalars(sig: &Signal<f64>) -> Vec<f64> {
    sig.scalars().expect("benchmark signals are scalar")
}

pub fn cmd_generate(rc: &RunConfig, out: &Path) -> Result<()> {
    ensure_out(out)?;
    let data = build_datasets(&rc.experiment)?;
    csv::write_dataset(
        &out.join("train.csv"),
        &scalars(&data.train.u),
        Some(&scalars(&data.train.y)),
    )?;
    csv::write_dataset(&out.join("reg.csv"), &scalars(&data.reg.u_bar), None)?;
    csv::write_dataset(
        &out.join("test.csv"),
        &scalars(&data.test.u),
        Some(&scalars(&data.test.y)),
    )?;
    csv::write_dataset(
        &out.join("val_classical.csv"),
        &scalars(&data.val_classical.u),
        Some(&scalars(&data.val_classical.y)),
    )?;
    csv::write_dataset(
        &out.join("val_wpgnn.csv"),
        &scalars(&data.val_wpgnn.u),
        Some(&scalars(&data.val_wpgnn.y)),
    )?;
    println!("wrote train/reg/test/val datasets to {}", out.display());
    Ok(())
}

fn load_training_files(out: &Path) -> Result<(Dataset<f64>, RegSet<f64>)> {
    let train_path = out.join("train.csv");
    let t = csv::read_dataset(&train_path)?;
    let y = t.y.ok_or_else(|| {
        CliError::parse(&train_path, 1, "training file must carry a 'y' column")
    })?;
    let d = Dataset::new(Signal::from_scalars(t.u)?, Signal::from_scalars(y)?)?;
    let r = csv::read_dataset(&out.join("reg.csv"))?;
    let reg = RegSet::new(Signal::from_scalars(r.u)?, None)?;
    Ok((d, reg))
}

#[derive(Serialize)]
struct ReportFile {
    method: String,
    iterations: usize,
    termination: String,
    final_cost: f64,
    rmse_train: f64,
    cost_history: Vec<f64>,
}

pub fn cmd_train(rc: &RunConfig, methods: &[Mode], out: &Path) -> Result<()> {
    ensure_out(out)?;
    let cfg = &rc.experiment;
    let (d, reg) = load_training_files(out)?;
    let x0 = cfg.x0_vec();
    for &mode in methods {
        let m0 = AugmentedModel64::init(
            SisoTruth::default().prior(),
            cfg.n_n,
            cfg.seed_init,
            cfg.with_output_completion,
        )?;
        let reg_opt = (mode != Mode::Baseline).then_some(&reg);
        let (model, report) =
            train(mode, &m0, &d, reg_opt, &cfg.hyperparams, &cfg.lm, &x0)?;
        if report.termination.name() == "diverged" {
            return Err(CliError::Diverged(format!(
                "{} training diverged at the initial model",
                mode.name()
            )));
        }
        let (_, y_hat) = model.simulate(&d.u, &x0)?;
        let rmse_train = rmse(&d.y, &y_hat)?;
        let final_cost = report.cost_history.last().copied().unwrap_or(f64::NAN);
        let artifact = ModelArtifact::from_model(
            &model,
            TrainingMeta {
                method: mode.name().into(),
                final_cost,
                iterations: report.iterations,
                termination: report.termination.name().into(),
                seed_init: cfg.seed_init,
            },
        );
        artifact.save(&out.join(format!("model_{}.json", mode.name())))?;
        let rep = ReportFile {
            method: mode.name().into(),
            iterations: report.iterations,
            termination: report.termination.name().into(),
            final_cost,
            rmse_train,
            cost_history: report.cost_history,
        };
        let rep_path = out.join(format!("report_{}.json", mode.name()));
        let text = serde_json::to_string_pretty(&rep)
            .map_err(|e| CliError::Io(format!("report serialization: {e}")))?;
        std::fs::write(&rep_path, text).map_err(|e| CliError::io(&rep_path, e))?;
        println!(
            "{}: train RMSE {rmse_train:.6}, {} iterations, {}",
            mode.name(),
            rep.iterations,
            rep.termination
        );
    }
    Ok(())
}

pub fn cmd_eval(
    rc: &RunConfig,
    methods: &[Mode],
    out: &Path,
    dataset: Option<&Path>,
) -> Result<()> {
    ensure_out(out)?;
    let default_path = out.join("test.csv");
    let data_path: &Path = dataset.unwrap_or(&default_path);
    let parsed = csv::read_dataset(data_path)?;
    let y = parsed.y.ok_or_else(|| {
        CliError::parse(data_path, 1, "evaluation needs a 'y' column")
    })?;
    let u = Signal::from_scalars(parsed.u)?;
    let y = Signal::from_scalars(y)?;
    let x0 = rc.experiment.x0_vec();
    let mut rows = Vec::new();
    for &mode in methods {
        let model_path = out.join(format!("model_{}.json", mode.name()));
        let model = ModelArtifact::load(&model_path)?.to_model()?;
        let (_, y_hat) = model.simulate(&u, &x0)?;
        let r = rmse(&y, &y_hat)?;
        println!("{}: RMSE {r:.6} on {}", mode.name(), data_path.display());
        rows.push(vec![
            mode.name().to_string(),
            data_path.display().to_string(),
            format!("{r}"),
            format!("{}", u.len()),
        ]);
    }
    csv::write_table(&out.join("metrics.csv"), "method,dataset,rmse,samples", &rows)
}

pub fn cmd_montecarlo(rc: &RunConfig, methods: &[Mode], out: &Path) -> Result<()> {
    ensure_out(out)?;
    let mut rows = Vec::new();
    println!("method,train_mean,train_std,test_mean,test_std,runs");
    for &mode in methods {
        let mc = monte_carlo(mode, &rc.experiment, rc.n_runs)?;
        let r = &mc.row;
        println!(
            "{},{:.6},{:.6},{:.6},{:.6},{}",
            r.method, r.rmse_train_mean, r.rmse_train_std, r.rmse_test_mean, r.rmse_test_std,
            r.runs
        );
        rows.push(vec![
            r.method.clone(),
            format!("{}", r.rmse_train_mean),
            format!("{}", r.rmse_train_std),
            format!("{}", r.rmse_test_mean),
            format!("{}", r.rmse_test_std),
            format!("{}", r.runs),
        ]);
    }
    csv::write_table(
        &out.join("montecarlo.csv"),
        "method,train_mean,train_std,test_mean,test_std,runs",
        &rows,
    )
}

pub fn cmd_gridsearch(rc: &RunConfig, methods: &[Mode], out: &Path) -> Result<()> {
    ensure_out(out)?;
    for &mode in methods {
        if mode == Mode::Baseline {
            println!("baseline: no hyperparameters to search");
            continue;
        }
        let hp = grid_search(mode, &HyperGrids::default(), &rc.experiment)?;
        let text = format!(
            "gamma = {}\ngamma_x = {}\ngamma_y = {}\nsigma = {}\nepsilon = {}\n",
            hp.gamma, hp.gamma_x, hp.gamma_y, hp.sigma, hp.epsilon
        );
        let path = out.join(format!("hyperparams_{}.toml", mode.name()));
        std::fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
        println!("{}:\n{text}", mode.name());
    }
    Ok(())
}

/// Completion-function curves over the plot grid: the true a·x + Δ(x)
/// against a·x + f_θ(x, 0) for each trained method.
pub fn cmd_plotdata(out: &Path) -> Result<()> {
    ensure_out(out)?;
    let truth = SisoTruth::default();
    let models: Vec<AugmentedModel64> = [Mode::Baseline, Mode::Classical, Mode::Wpgnn]
        .iter()
        .map(|m| {
            ModelArtifact::load(&out.join(format!("model_{}.json", m.name())))?.to_model()
        })
        .collect::<Result<_>>()?;
    let a = truth.prior().a()[(0, 0)];
    let mut rows = Vec::new();
    for i in 0..=500 {
        let x = (i as f64 - 250.0) / 100.0;
        let mut row = vec![format!("{x}"), format!("{}", a * x + truth.delta(x))];
        for model in &models {
            let f = model.f_net().forward(
                &nalgebra::DVector::from_element(1, x),
                &nalgebra::DVector::from_element(1, 0.0),
            )?;
            row.push(format!("{}", a * x + f[0]));
        }
        rows.push(row);
    }
    csv::write_table(
        &out.join("plot_completion.csv"),
        "x,true,baseline,classical,wpgnn",
        &rows,
    )?;
    println!(
        "wrote {} grid rows to {}",
        rows.len(),
        out.join("plot_completion.csv").display()
    );
    Ok(())
}
