//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::ThreadPoolBuilder;
use rtscts::experiment::{run_sweep, to_csv, ExperimentConfig};
use rtscts::verify::{self, CheckOutcome, Effort, InterferenceStudy};
use rtscts::ThinningType;

const SEED: u64 = 1;

struct Line {
    label: String,
    checks: Vec<CheckOutcome>,
    elapsed: Duration,
    budget: Duration,
}

impl Line {
    fn passed(&self) -> bool {
        self.elapsed <= self.budget && self.checks.iter().all(|c| c.passed)
    }

    fn print(&self) {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let failing: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} [{}]", c.check, c.detail))
            .collect();
        let mut note = format!(
            "{} checks, {:.1} s",
            self.checks.len(),
            self.elapsed.as_secs_f64()
        );
        if self.elapsed > self.budget {
            note.push_str(&format!(", over the {} s budget", self.budget.as_secs()));
        }
        if !failing.is_empty() {
            note.push_str("; failing: ");
            note.push_str(&failing.join("; "));
        }
        println!("criterion {}: {status} ({note})", self.label);
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn line(label: &str, checks: Vec<CheckOutcome>, elapsed: Duration, budget: Duration) -> Line {
    Line {
        label: label.to_owned(),
        checks,
        elapsed,
        budget,
    }
}

/// Every criterion-1..7 check, in a fixed order.
fn full_suite() -> (Vec<Line>, Vec<CheckOutcome>) {
    let mut lines = Vec::new();
    let mut all = Vec::new();

    let ((identity, darts), t) = timed(|| {
        (
            verify::exclusion_identity(SEED, Effort::Full),
            verify::union_against_darts(SEED, Effort::Full),
        )
    });
    lines.push(line("1", vec![identity, darts], t, minutes(2)));

    for (label, thinning) in [("2", ThinningType::TypeI), ("3", ThinningType::TypeII)] {
        let (checks, t) = timed(|| {
            verify::intensity_sweep(thinning, SEED, Effort::Full).expect("simulation runs")
        });
        lines.push(line(label, checks, t, minutes(5)));
    }

    let (checks, t) = timed(|| verify::kernel_oracle(SEED, Effort::Full));
    lines.push(line("4", checks, t, minutes(10)));

    let (checks, t) = timed(verify::beta_consistency);
    lines.push(line("5", checks, t, minutes(1)));

    let (studies, t6): (Vec<InterferenceStudy>, _) = timed(|| {
        ThinningType::ALL
            .into_iter()
            .map(|th| verify::interference_study(th, SEED, Effort::Full).expect("simulation runs"))
            .collect()
    });
    let share = t6 / 2;
    for s in &studies {
        lines.push(line(
            &format!("6 ({})", s.thinning),
            verify::interference_agreement(s),
            share,
            minutes(15),
        ));
    }

    let (nesting, t7) = timed(|| verify::nesting(SEED, Effort::Full));
    for s in &studies {
        let mut checks = vec![nesting.clone()];
        checks.extend(verify::palm_invariants(s));
        lines.push(line(&format!("7 ({})", s.thinning), checks, t7, minutes(5)));
    }

    for l in &lines {
        all.extend(l.checks.iter().cloned());
    }
    (lines, all)
}

const SWEEP: &str = r#"
[network]
unit = "m"
d = 2.0
r_cs = 2.0
r_tx = 1.0
p_t = 1.0
alpha = 4.0
amplitude = 1.0

[quadrature]
r_max = 12.0
n_r = 8
n_phi = 16
n_theta = 8
refine_levels = 2
rel_tol = 0.05

[simulation]
replications = 200
seed = 11

[sweep]
lambda_p = [0.02, 0.05]
thinning = ["type1"]
"#;

fn sweep_csv(workers: usize) -> String {
    let cfg = ExperimentConfig::from_toml(SWEEP).expect("valid config");
    let points = cfg.points().expect("valid sweep");
    to_csv(&run_sweep(&points, false, workers).expect("sweep runs"))
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}

fn main() -> ExitCode {
    let (mut lines, first) = in_pool(3, full_suite);
    let ((second, sweeps), t) = timed(|| {
        let (_, second) = in_pool(1, full_suite);
        (second, (sweep_csv(1), sweep_csv(3)))
    });
    let a = verify::outcomes_csv(&first);
    let b = verify::outcomes_csv(&second);
    let suite_same = a == b;
    let sweep_same = sweeps.0 == sweeps.1;
    let checks = vec![
        CheckOutcome {
            criterion: 8,
            check: "verification CSV identical across 3 and 1 workers".into(),
            passed: suite_same,
            observed: a.len() as f64,
            threshold: b.len() as f64,
            detail: format!("{} bytes vs {} bytes", a.len(), b.len()),
        },
        CheckOutcome {
            criterion: 8,
            check: "sweep CSV identical across 1 and 3 workers".into(),
            passed: sweep_same,
            observed: sweeps.0.len() as f64,
            threshold: sweeps.1.len() as f64,
            detail: format!("{} bytes", sweeps.0.len()),
        },
    ];
    lines.push(line("8", checks, t, minutes(40)));

    for l in &lines {
        l.print();
    }
    let failed = lines.iter().filter(|l| !l.passed()).count();
    println!(
        "acceptance: {} of {} criterion lines passed",
        lines.len() - failed,
        lines.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
