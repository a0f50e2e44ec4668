use avgrew_core::control::{epsilon_greedy, DiffQ};
use avgrew_core::envs::{build_two_loop, TwoLoopVariant};
use avgrew_core::mdp::{sample_transition, seeded_rng, StepSizeSchedule, Transition};

fn main() {
    let mdp = build_two_loop(TwoLoopVariant::Standard);
    let mut learner = DiffQ::zeros(&mdp, 1.0, StepSizeSchedule::constant(0.1));
    let mut rng = seeded_rng(0);
    let mut s = 0;
    for _ in 0..50_000 {
        let a = epsilon_greedy(&learner.q, s, 0.1, &mut rng);
        let (s2, r) = sample_transition(&mdp, s, a, &mut rng).unwrap();
        learner.step(&Transition::new(s, a, r, s2));
        s = s2;
    }
    println!("reward-rate estimate {}", learner.rbar);
}
