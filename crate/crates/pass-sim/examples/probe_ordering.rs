// probe: paired framework orderings at desk scale
use pass_sim::experiment::*;

fn main() {
    for objective in [Objective::Mse, Objective::Wsr] {
        let mut spec = ExperimentSpec::desk_default(objective);
        spec.trials = 30;
        let result = run_experiment(&spec).unwrap();
        println!("=== objective {:?} (CaseII) ===", objective);
        for row in &result.rows {
            println!(
                "{:>9}: mse/K {:.6e}  sinr {:>7.2} dB  wsr {:>8.4}  iters {:.1}",
                row.framework.label(),
                row.mse_per_ue.mean,
                row.sinr_db,
                row.wsr.mean,
                row.iterations.mean
            );
        }
        // paired comparisons
        let chain = [Framework::JccSm, Framework::JccSa, Framework::JccSs, Framework::ConvPass, Framework::Mimo];
        for pair in chain.windows(2) {
            let better: Vec<f64> = result.records.iter().filter(|r| r.framework == pair[0]).map(|r| if objective == Objective::Mse { r.mse_per_ue } else { r.wsr }).collect();
            let worse: Vec<f64> = result.records.iter().filter(|r| r.framework == pair[1]).map(|r| if objective == Objective::Mse { r.mse_per_ue } else { r.wsr }).collect();
            let wins = better.iter().zip(&worse).filter(|(b, w)| if objective == Objective::Mse { b <= w } else { b >= w }).count();
            println!("  {} vs {}: {}/{} paired wins", pair[0].label(), pair[1].label(), wins, better.len());
        }
    }
    // CaseI vs CaseII per-trial WSR
    let mut spec1 = ExperimentSpec::desk_default(Objective::Wsr);
    spec1.trials = 30;
    spec1.loss_case = LossCase::CaseI;
    let mut spec2 = spec1.clone();
    spec2.loss_case = LossCase::CaseII;
    let r1 = run_experiment(&spec1).unwrap();
    let r2 = run_experiment(&spec2).unwrap();
    for fw in Framework::ALL {
        let a: Vec<f64> = r1.records.iter().filter(|r| r.framework == fw).map(|r| r.wsr).collect();
        let b: Vec<f64> = r2.records.iter().filter(|r| r.framework == fw).map(|r| r.wsr).collect();
        let ok = a.iter().zip(&b).filter(|(x, y)| y <= x).count();
        println!("CaseII<=CaseI wsr {}: {}/{}", fw.label(), ok, a.len());
    }
}
