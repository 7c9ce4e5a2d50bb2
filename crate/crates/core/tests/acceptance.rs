//! Acceptance suite: one PASS/FAIL line per criterion, with wall-clock budgets.
//! Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use maxproc::grid_calc::{PairKernel, ProcessParams};
use maxproc::mc_sim::PointSample;
use maxproc::verify::{
    closed_form_anchor, cross_method, g1_tails, kummer_transform, mc_data, mc_gap_law, mc_intensity,
    mc_pair_correlation, mc_regenerative, negative_control, renewal_mean, root_and_slope, triplet_checks, verify_with,
    CriterionResult, Profile, VerifySettings, WrongPlateau, WRONG_PLATEAU_FACTOR,
};

const SEED: u64 = 20_240_601;

/// Wall-clock budgets per criterion.
const BUDGET_ANCHOR: Duration = Duration::from_secs(5);
const BUDGET_CROSS: Duration = Duration::from_secs(10);
const BUDGET_MC_INTENSITY: Duration = Duration::from_secs(600);

struct Ledger {
    failures: usize,
}

impl Ledger {
    fn record(&mut self, c: &CriterionResult, elapsed: Duration, budget: Option<Duration>) {
        let in_budget = budget.is_none_or(|b| elapsed <= b);
        let pass = c.pass && in_budget;
        self.failures += usize::from(!pass);
        let budget = budget
            .map(|b| format!(" (budget {}s)", b.as_secs()))
            .unwrap_or_default();
        println!(
            "{} criterion {:>2} {:<30} {:>8.2}s{budget}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
        for (k, v) in &c.metrics {
            println!("       {k} = {v:.6e}");
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() -> ExitCode {
    let settings = VerifySettings::new(Profile::Full, SEED);
    let p = ProcessParams::new(1.0, 1.0).unwrap();
    let kernels = |q: ProcessParams| Box::new(q) as Box<dyn PairKernel>;
    let mut ledger = Ledger { failures: 0 };

    let ((tails, c1), t1) = timed(|| {
        let tails = g1_tails(&p).unwrap();
        let c1 = closed_form_anchor(&tails);
        (tails, c1)
    });
    ledger.record(&c1, t1, Some(BUDGET_ANCHOR));
    let (c2, t2) = timed(|| cross_method(&tails).unwrap());
    ledger.record(&c2, t1 + t2, Some(BUDGET_CROSS));
    let (c3, t3) = timed(|| kummer_transform(&tails).unwrap());
    ledger.record(&c3, t3, None);
    let (c4, t4) = timed(|| root_and_slope(&tails).unwrap());
    ledger.record(&c4, t4, None);
    let ((c5, law), t5) = timed(|| renewal_mean(&kernels).unwrap());
    ledger.record(&c5, t5, None);

    let (data, t_sim) = timed(|| mc_data(&settings).unwrap());
    let samples: Vec<PointSample> = data.iter().map(|o| o.coarse.points.clone()).collect();
    let (c6, t6) = timed(|| mc_intensity(&p, &data, settings.mc.dt).unwrap());
    ledger.record(&c6, t_sim + t6, Some(BUDGET_MC_INTENSITY));
    let (c7, t7) = timed(|| mc_pair_correlation(&p, &samples).unwrap());
    ledger.record(&c7, t7, None);
    let (c8, t8) = timed(|| mc_gap_law(&law, &samples).unwrap());
    ledger.record(&c8, t8, None);
    let (c9, t9) = timed(|| triplet_checks(settings.seed, settings.mc.triplets).unwrap());
    ledger.record(&c9, t9, None);
    let (c10, t10) = timed(|| mc_regenerative(&p, &data, settings.mc.dt).unwrap());
    ledger.record(&c10, t10, None);
    let (c11, t11) = timed(|| negative_control(Some(&samples)).unwrap());
    ledger.record(&c11, t11, None);

    // the same fixture through the generic suite entry point
    let wrong = |q: ProcessParams| {
        Box::new(WrongPlateau {
            params: q,
            factor: WRONG_PLATEAU_FACTOR,
        }) as Box<dyn PairKernel>
    };
    let fast = verify_with(&VerifySettings::new(Profile::Fast, SEED), &wrong).unwrap();
    let rejected = !fast.criterion(2).unwrap().pass;
    println!(
        "{} negative control rejected by the generic suite (criterion 2)",
        if rejected { "PASS" } else { "FAIL" }
    );
    ledger.failures += usize::from(!rejected);

    println!(
        "acceptance: {} failing, simulation {:.2}s",
        ledger.failures,
        t_sim.as_secs_f64()
    );
    if ledger.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
