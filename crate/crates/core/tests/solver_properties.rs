use pmm_core::linalg::{dist2, SymMatrix};
use pmm_core::problems::{build_lmi_feasibility, build_pd_feasibility, gen_lmi, gen_socp, pd_certificate_point, uniform_cones};
use pmm_core::solver::{pmm_solve_observed, IterationView};
use pmm_core::{ProblemSpec, SolverConfig, Status, Variant};

struct Case {
    name: String,
    spec: ProblemSpec,
    cert: Vec<f64>,
}

fn socp(seed: u64) -> Case {
    let inst = gen_socp(seed, 60, 20, &uniform_cones(60, 3).unwrap()).unwrap();
    Case {
        name: format!("socp seed {seed}"),
        spec: build_pd_feasibility(&inst).unwrap(),
        cert: pd_certificate_point(&inst).unwrap(),
    }
}

fn lmi(seed: u64) -> Case {
    let inst = gen_lmi(seed, 6, 3).unwrap();
    let cert = SymMatrix::symmetric_part(inst.certificate.as_ref().unwrap()).unwrap().svec();
    Case {
        name: format!("lmi seed {seed}"),
        spec: build_lmi_feasibility(&inst, 2).unwrap(),
        cert,
    }
}

fn cases() -> Vec<Case> {
    (0..3).flat_map(|s| [socp(s), lmi(s)]).collect()
}

fn config(memory: usize, variant: Variant) -> SolverConfig {
    SolverConfig {
        memory,
        epsilon: 1e-6,
        max_iterations: 300,
        variant,
        record_iterates: true,
    }
}

#[test]
fn fejer_monotone_toward_the_certificate() {
    for case in cases() {
        for variant in [Variant::Standard, Variant::Alternating] {
            for memory in [0, 5] {
                let x1 = vec![0.0; case.spec.dim];
                let r = pmm_solve_observed(&case.spec, &config(memory, variant), &x1, &mut |_| {}).unwrap();
                let d: Vec<f64> = r.trace.iter().map(|t| dist2(t.iterate.as_ref().unwrap(), &case.cert)).collect();
                for (k, w) in d.windows(2).enumerate() {
                    assert!(w[1] <= w[0] + 1e-7, "{} {variant:?} M={memory} k={}: {} > {}", case.name, k + 1, w[1], w[0]);
                }
            }
        }
    }
}

#[test]
fn iterates_are_members_and_steps_square_summable() {
    for case in cases() {
        for variant in [Variant::Standard, Variant::Alternating] {
            let x1 = vec![0.0; case.spec.dim];
            let mut outside = Vec::new();
            let mut observe = |v: &IterationView| {
                if !v.problem.contains(v.x_next, 1e-8) {
                    outside.push(v.k);
                }
            };
            let r = pmm_solve_observed(&case.spec, &config(5, variant), &x1, &mut observe).unwrap();
            assert!(outside.is_empty(), "{} {variant:?}: x^(k+1) outside X^k at {outside:?}", case.name);
            let total: f64 = r.trace.iter().map(|t| t.step_norm * t.step_norm).sum();
            let bound = dist2(&x1, &case.cert).powi(2);
            assert!(total <= bound + 1e-6, "{} {variant:?}: {total} > {bound}", case.name);
        }
    }
}

#[test]
fn equalities_hold_after_the_first_projection() {
    for seed in 0..3 {
        let case = socp(seed);
        let x1 = vec![0.0; case.spec.dim];
        let r = pmm_solve_observed(&case.spec, &config(5, Variant::Standard), &x1, &mut |_| {}).unwrap();
        assert_eq!(r.status, Status::Solved, "{}", case.name);
        for t in &r.trace[1..] {
            let res = case.spec.equalities.residual(t.iterate.as_ref().unwrap());
            assert!(res <= 1e-8, "{} k={}: {res}", case.name, t.k);
        }
    }
}
