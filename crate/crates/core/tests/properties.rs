//! Property tests over small random instances.

use proptest::prelude::*;
use sdd_core::*;

const TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Raw {
    orders: Vec<(f64, f64, f64, [f64; 3])>,
    stations: Vec<(f64, f64, u32)>,
    horizon: f64,
    radius: f64,
    max_trips: Option<usize>,
}

impl Raw {
    fn build(&self) -> Instance {
        let mut inst = Instance::new(self.horizon);
        inst.options = Some(OptionSet {
            deadlines: vec![60.0, 120.0, 240.0],
        });
        inst.radius = Some(self.radius);
        inst.max_trips = self.max_trips;
        for (id, &(x, y, r, w)) in (1..).zip(&self.orders) {
            let mut w = w.to_vec();
            w.sort_by(|a, b| b.total_cmp(a));
            inst.orders.push(Order::new(id, x, y, r).with_wtp(w));
        }
        for (id, &(x, y, c)) in (1..).zip(&self.stations) {
            inst.stations.push(Station::new(id, x, y, c));
        }
        inst
    }

    fn valid(&self) -> ValidInstance {
        self.build().validate().unwrap()
    }
}

fn coord() -> impl Strategy<Value = f64> {
    -40.0..40.0f64
}

fn raw(max_orders: usize) -> impl Strategy<Value = Raw> {
    let order = (coord(), coord(), 0.0..120.0f64, [0.0..40.0f64, 0.0..40.0f64, 0.0..40.0f64]);
    let station = (coord(), coord(), 1..=3u32);
    (
        prop::collection::vec(order, 0..=max_orders),
        prop::collection::vec(station, 1..=3),
        80.0..250.0f64,
        15.0..45.0f64,
        prop::option::of(1..=3usize),
    )
        .prop_map(|(orders, stations, horizon, radius, max_trips)| Raw {
            orders,
            stations,
            horizon,
            radius,
            max_trips,
        })
}

fn objective(inst: &ValidInstance, kind: ModelKind) -> (usize, f64) {
    let cfg = SolverConfig::default();
    let rep = match kind {
        ModelKind::F1 => solve_f1(inst, &cfg).unwrap(),
        ModelKind::F2 => solve_f2(inst, &cfg).unwrap().report,
        ModelKind::F2Lex => solve_f2_lex(inst, &cfg).unwrap().report,
        ModelKind::F3 => solve_f3(inst, &cfg).unwrap(),
        ModelKind::F4 => solve_f4(inst, &cfg).unwrap(),
    };
    (rep.served, rep.objective)
}

fn same_objectives(a: &ValidInstance, b: &ValidInstance) -> std::result::Result<(), TestCaseError> {
    for kind in ModelKind::ALL {
        let (sa, oa) = objective(a, kind);
        let (sb, ob) = objective(b, kind);
        prop_assert_eq!(sa, sb, "{} served", kind);
        prop_assert!((oa - ob).abs() <= TOL, "{}: {} vs {}", kind, oa, ob);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn validation_is_idempotent(r in raw(6)) {
        let once = r.valid();
        let twice = once.instance().clone().validate().unwrap();
        prop_assert_eq!(once.instance(), twice.instance());
        let reread = Instance::from_json(&once.to_json()).unwrap().validate().unwrap();
        prop_assert_eq!(once.instance(), reread.instance());
    }

    #[test]
    fn distances_obey_triangle_inequality(pts in prop::collection::vec((coord(), coord()), 1..8)) {
        let locs: Vec<Location> = pts.iter().map(|&(x, y)| Location::new(x, y)).collect();
        let d = distance_matrix(&locs).unwrap();
        prop_assert_eq!(d.triangle_violation(1e-9), None);
        for u in 0..d.len() {
            prop_assert_eq!(d.get(u, u), 0.0);
            for v in 0..d.len() {
                prop_assert_eq!(d.get(u, v), d.get(v, u));
            }
        }
    }

    #[test]
    fn wider_radius_keeps_stations(
        c in (coord(), coord()),
        st in prop::collection::vec((coord(), coord()), 0..5),
        r in 0.0..50.0f64,
        extra in 0.0..20.0f64,
    ) {
        let customer = Location::new(c.0, c.1);
        let locs: Vec<Location> = st.iter().map(|&(x, y)| Location::new(x, y)).collect();
        let with = |radius| feasible_stations(&customer, (1..).zip(&locs), radius);
        let narrow = with(r);
        let wide = with(r + extra);
        prop_assert!(narrow.iter().all(|id| wide.contains(id)));
    }

    #[test]
    fn solvers_match_oracle(r in raw(5)) {
        let inst = r.valid();
        let guard = OracleGuard::default();
        for kind in ModelKind::ALL {
            let exact = oracle_solve(&inst, kind, &guard).unwrap();
            let (served, obj) = objective(&inst, kind);
            if kind == ModelKind::F1 {
                prop_assert_eq!(served, exact.served);
            }
            prop_assert!((obj - exact.objective).abs() <= TOL, "{}: solver {} oracle {}", kind, obj, exact.objective);
        }
    }

    #[test]
    fn solver_plans_check_out(r in raw(6)) {
        let inst = r.valid();
        let cfg = SolverConfig::default();
        let (rev, lex) = sdd_core::solver::solve_slots(&inst, &cfg).unwrap();
        let reports = [
            solve_f1(&inst, &cfg).unwrap(),
            rev.report,
            lex.report,
            solve_f3(&inst, &cfg).unwrap(),
            solve_f4(&inst, &cfg).unwrap(),
        ];
        for rep in &reports {
            prop_assert!(validate_plan(&inst, &rep.plan).is_ok(), "{}: {:?}", rep.model_kind, validate_plan(&inst, &rep.plan));
            let value = eval_objective(&inst, &rep.plan).unwrap();
            prop_assert!((value - rep.objective).abs() <= TOL);
            prop_assert_eq!(rep.served, rep.plan.num_served());
        }
    }

    #[test]
    fn longer_day_serves_no_fewer(r in raw(6), extra in 0.0..100.0f64) {
        let short = r.valid();
        let long = Raw { horizon: r.horizon + extra, ..r.clone() }.valid();
        prop_assert!(objective(&long, ModelKind::F1).0 >= objective(&short, ModelKind::F1).0);
    }

    #[test]
    fn routed_trips_never_cost_more(r in raw(6)) {
        let inst = r.valid();
        prop_assert!(objective(&inst, ModelKind::F4).1 <= objective(&inst, ModelKind::F3).1 + TOL);
    }

    #[test]
    fn higher_prices_never_lower_revenue(r in raw(6), factor in 1.0..3.0f64, bump in 0.0..10.0f64) {
        let base = r.valid();
        let mut richer = r.clone();
        for o in &mut richer.orders {
            for w in &mut o.3 {
                *w = *w * factor + bump;
            }
        }
        let richer = richer.valid();
        prop_assert!(objective(&richer, ModelKind::F2).1 >= objective(&base, ModelKind::F2).1 - TOL);
    }

    #[test]
    fn relabeling_keeps_objectives(r in raw(5), shift in 1u32..50, reverse in any::<bool>()) {
        let inst = r.valid();
        let mut relabeled = r.build();
        let n = relabeled.orders.len() as u32;
        for o in &mut relabeled.orders {
            o.id = if reverse { n + 1 - o.id } else { o.id } + shift;
        }
        let m = relabeled.stations.len() as u32;
        for s in &mut relabeled.stations {
            s.id = if reverse { m + 1 - s.id } else { s.id } + shift;
        }
        same_objectives(&inst, &relabeled.validate().unwrap())?;
    }

    #[test]
    fn congruent_layouts_keep_objectives(r in raw(5), dx in -50.0..50.0f64, dy in -50.0..50.0f64, angle in 0.0..std::f64::consts::TAU) {
        let inst = r.valid();
        let (s, c) = angle.sin_cos();
        let move_to = |loc: &mut Location| {
            let (x, y) = (loc.x, loc.y);
            *loc = Location::new(c * x - s * y + dx, s * x + c * y + dy);
        };
        let mut moved = r.build();
        move_to(&mut moved.depot);
        moved.orders.iter_mut().for_each(|o| move_to(&mut o.loc));
        moved.stations.iter_mut().for_each(|st| move_to(&mut st.loc));
        same_objectives(&inst, &moved.validate().unwrap())?;
    }

    #[test]
    fn solving_is_deterministic(r in raw(6)) {
        let inst = r.valid();
        let cfg = SolverConfig::default();
        prop_assert_eq!(solve_f1(&inst, &cfg).unwrap().plan, solve_f1(&inst, &cfg).unwrap().plan);
        prop_assert_eq!(solve_f4(&inst, &cfg).unwrap().plan, solve_f4(&inst, &cfg).unwrap().plan);
        prop_assert_eq!(solve_f2_lex(&inst, &cfg).unwrap().choices, solve_f2_lex(&inst, &cfg).unwrap().choices);
    }

    #[test]
    fn generated_instances_round_trip(
        orders in 0..10usize,
        stations in 0..4usize,
        alpha in 0.0..=1.0f64,
        seed in any::<u64>(),
    ) {
        let profile = GeneratorProfile { orders, stations, alpha, seed, ..Default::default() };
        let inst = generate(&profile).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.validate().unwrap().into_inner(), inst.clone().validate().unwrap().into_inner());
        prop_assert_eq!(generate(&profile).unwrap(), inst);
    }
}
