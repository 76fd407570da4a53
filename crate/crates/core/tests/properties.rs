//! Property tests for the structural invariants of the equilibrium.

use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sigcomp_core::belief::{Action, BeliefEngine};
use sigcomp_core::model::{build_config, RawSpec, Sender};
use sigcomp_core::simulator::{run_sim, SimulationSettings};
use sigcomp_core::strategy::StrategyProfile;
use sigcomp_core::welfare::plus_probability;

fn symq() -> &'static StrategyProfile {
    static P: OnceLock<StrategyProfile> = OnceLock::new();
    P.get_or_init(|| StrategyProfile::solve(&build_config(&RawSpec::symmetric_quadratic()).unwrap()).unwrap())
}

fn asymmetric() -> &'static StrategyProfile {
    static P: OnceLock<StrategyProfile> = OnceLock::new();
    P.get_or_init(|| {
        let mut raw = RawSpec::symmetric_quadratic();
        raw.costs.k_2 = 2.0;
        StrategyProfile::solve(&build_config(&raw).unwrap()).unwrap()
    })
}

fn profiles() -> [&'static StrategyProfile; 2] {
    [symq(), asymmetric()]
}

fn sender() -> impl Strategy<Value = Sender> {
    prop_oneof![Just(Sender::One), Just(Sender::Two)]
}

/// A state strictly inside the cutoffs, as a fraction of the way from θ_1 to θ_2.
fn inner_state(p: &StrategyProfile, u: f64) -> f64 {
    let c = p.cutoffs();
    c.theta_1 + (c.theta_2 - c.theta_1) * u
}

fn total_mass(p: &StrategyProfile, sender: Sender, theta: f64) -> f64 {
    let st = p.state(sender, theta);
    let Some((lo, hi)) = st.support else { return st.atom_mass };
    let quad = p.cfg().settings.quad();
    let mut cuts = vec![lo];
    cuts.extend(p.density_breakpoints(sender, theta));
    cuts.push(hi);
    st.atom_mass
        + cuts.windows(2).map(|w| quad.integrate(|r| p.density(sender, r, theta), w[0], w[1]).value).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn swing_is_a_decreasing_involution(which in 0usize..2, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let s = profiles()[which].swing();
        let (lo, hi) = s.domain();
        let (a, b) = (lo + (hi - lo) * u, lo + (hi - lo) * v);
        prop_assert!((s.eval(s.eval(a).unwrap()).unwrap() - a).abs() <= 1e-9);
        if a < b {
            prop_assert!(s.eval(a).unwrap() > s.eval(b).unwrap());
        }
    }

    #[test]
    fn strategies_are_normalised(which in 0usize..2, j in sender(), u in 0.01f64..0.99) {
        let p = profiles()[which];
        let theta = inner_state(p, u);
        prop_assert!((total_mass(p, j, theta) - 1.0).abs() <= 1e-7);
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one(which in 0usize..2, j in sender(), u in 0.01f64..0.99, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let p = profiles()[which];
        let theta = inner_state(p, u);
        let (lo, hi) = p.cfg().conflict_region();
        let (x, y) = (lo + (hi - lo) * a.min(b), lo + (hi - lo) * a.max(b));
        let (fx, fy) = (p.cdf(j, x, theta), p.cdf(j, y, theta));
        prop_assert!(fx <= fy + 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&fx));
        prop_assert!((p.cdf(j, hi, theta) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn samples_stay_in_the_support(which in 0usize..2, j in sender(), u in 0.0f64..1.0, seed in any::<u64>()) {
        let p = profiles()[which];
        let theta = inner_state(p, u);
        let st = p.state(j, theta);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..32 {
            let r = p.sample_report(j, theta, &mut rng);
            let inside = st.support.is_some_and(|(lo, hi)| r >= lo - 1e-9 && r <= hi + 1e-9);
            prop_assert!(r == theta || inside, "r = {r}, θ = {theta}, {st:?}");
        }
    }

    #[test]
    fn decision_is_monotone_in_reports(u in 0.0f64..1.0, v in 0.0f64..1.0, d in 0.0f64..0.2) {
        // Raising r_1 or r_2 can only move the decision towards ⊕.
        let e = BeliefEngine::new(symq());
        let (lo, hi) = symq().swing().domain();
        let (r_1, r_2) = (hi * u, lo * v);
        let base = e.decide(r_1, r_2).is_plus();
        prop_assert!(!base || e.decide(r_1 + d, r_2).is_plus());
        prop_assert!(!base || e.decide(r_1, r_2 + d).is_plus());
    }

    #[test]
    fn symmetric_game_is_antisymmetric(u in 0.005f64..0.245) {
        let p = symq();
        let sum = plus_probability(p, u).unwrap() + plus_probability(p, -u).unwrap();
        prop_assert!((sum - 1.0).abs() <= 1e-4, "{sum}");
        prop_assert!((p.atom(Sender::One, u) - p.atom(Sender::Two, -u)).abs() <= 1e-9);
    }

    #[test]
    fn truthful_outside_the_cutoffs(which in 0usize..2, j in sender(), t in 0.0f64..1.0) {
        let p = profiles()[which];
        let c = p.cutoffs();
        let cfg = p.cfg();
        let theta = cfg.theta_min + (cfg.theta_max - cfg.theta_min) * t;
        if !c.contains(theta) {
            prop_assert_eq!(p.atom(j, theta), 1.0);
            prop_assert!(p.state(j, theta).support.is_none());
            let e = BeliefEngine::new(p);
            prop_assert_eq!(e.decide(theta, theta), Action::from_payoff(cfg.u_dm.eval(theta)));
        }
    }
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let settings = SimulationSettings { draws: 20_000, seed: 99, ..Default::default() };
    let a = run_sim(symq(), &settings).unwrap();
    let b = run_sim(symq(), &settings).unwrap();
    assert_eq!(a, b);
    let c = run_sim(symq(), &SimulationSettings { seed: 100, ..settings }).unwrap();
    assert_ne!(a, c);
}
