use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::Rng;

use atlscpref_core::check::ctlstar_check;
use atlscpref_core::gen::{alphabet, Gen, Vocab};
use atlscpref_core::gnf::{all_lassos, closure, gnf, ltl_eval, tail, valuations};
use atlscpref_core::models::{build_mb, pref_update_path, to_kripke, unfold1, Cgm, Kripke, PrefTables, PreferenceDescription};
use atlscpref_core::pref_elim::elim_pref_at;
use atlscpref_core::{classify, desugar, parse, print_formula, substitute, sym, Formula};

fn vocab() -> Vocab {
    Vocab { atoms: alphabet(3), pref_agents: vec![1, 2], ..Default::default() }
}

fn random_game(g: &mut Gen) -> Cgm {
    let n = g.rng().gen_range(1..=3);
    let nacts: Vec<usize> = (0..2).map(|_| g.rng().gen_range(1..=2)).collect();
    let moves: usize = nacts.iter().product();
    let atoms = alphabet(2);
    Cgm {
        names: (0..n).map(|i| format!("w{i}")).collect(),
        initial: 0,
        agents: vec![1, 2],
        actions: nacts
            .iter()
            .enumerate()
            .map(|(i, &c)| (0..c).map(|a| sym(&format!("act{}_{a}", i + 1))).collect())
            .collect(),
        outcome: (0..n).map(|_| (0..moves).map(|_| g.rng().gen_range(0..n)).collect()).collect(),
        labels: (0..n)
            .map(|_| atoms.iter().filter(|_| g.rng().gen_bool(0.5)).cloned().collect())
            .collect(),
        prefs: BTreeMap::new(),
    }
}

fn walk(g: &mut Gen, k: &Kripke, len: usize) -> Vec<usize> {
    let mut path = vec![k.initial];
    for _ in 0..len {
        let s = &k.succ[*path.last().unwrap()];
        path.push(s[g.rng().gen_range(0..s.len())]);
    }
    path
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let v = vocab();
        for _ in 0..4 {
            let f = g.state(&v, 6);
            let back = parse(&print_formula(&f)).unwrap();
            prop_assert_eq!(&back, &f, "printed as {}", print_formula(&f));
            prop_assert!(classify(&back).is_ok());
        }
        let q = g.quantified(&v, 1, 3);
        prop_assert_eq!(parse(&print_formula(&q)).unwrap(), q);
    }

    #[test]
    fn desugar_is_idempotent_and_identity_substitution_is_trivial(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let f = g.state(&vocab(), 5);
        let d = desugar(&f);
        prop_assert_eq!(desugar(&d), d);
        prop_assert_eq!(substitute(&f, &BTreeMap::new()).unwrap(), f);
    }

    #[test]
    fn generator_is_deterministic(seed in any::<u64>()) {
        let (mut a, mut b) = (Gen::new(seed), Gen::new(seed));
        let atoms = alphabet(2);
        prop_assert_eq!(a.state(&vocab(), 4), b.state(&vocab(), 4));
        prop_assert_eq!(a.kripke(4, &atoms).succ, b.kripke(4, &atoms).succ);
        prop_assert_eq!(a.description(&atoms, 3, 2), b.description(&atoms, 3, 2));
    }

    #[test]
    fn normal_form_agrees_on_lassos(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let b = g.ltl(&alphabet(2), 3);
        let nf = gnf(&b).unwrap().as_formula();
        let atoms: Vec<_> = b.atoms().into_iter().collect();
        for w in all_lassos(&atoms, 3) {
            prop_assert_eq!(ltl_eval(&w, &b).unwrap(), ltl_eval(&w, &nf).unwrap(), "{} on {:?}", b, w);
        }
    }

    #[test]
    fn closure_is_closed_under_tails(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let b = g.ltl(&alphabet(3), 3);
        let cl = closure(&b).unwrap();
        let members: BTreeSet<&Formula> = cl.iter().collect();
        let atoms: Vec<_> = b.atoms().into_iter().collect();
        for c in &cl {
            for v in valuations(&atoms) {
                let t = tail(c, &v);
                prop_assert!(members.contains(&t), "tail {} of {} outside the closure of {}", t, c, b);
            }
        }
    }

    #[test]
    fn more_ordered_pairs_weaken_the_comparison(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let atoms = alphabet(2);
        let d = g.description(&atoms, 3, 2);
        let k = g.kripke(4, &atoms);
        let v = Vocab { atoms: atoms.clone(), classes: d.objectives.clone(), ..Default::default() };
        let (b1, b2) = (g.operand(&v, 2), g.operand(&v, 2));
        let all: Vec<(usize, usize)> = (1..=3).flat_map(|a| (1..=3).map(move |b| (a, b))).filter(|(a, b)| a != b).collect();
        let small: BTreeSet<_> = all.iter().copied().filter(|_| g.rng().gen_bool(0.3)).collect();
        let mut large = small.clone();
        large.extend(all.iter().copied().filter(|_| g.rng().gen_bool(0.3)));
        let strong = elim_pref_at(&b1, &b2, &d.objectives, &small);
        let weak = elim_pref_at(&b1, &b2, &d.objectives, &large);
        let holds = ctlstar_check(&k, &Formula::implies(strong, weak)).unwrap();
        prop_assert!(holds.iter().all(|&x| x));
    }

    #[test]
    fn game_structure_is_preserved(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let m = random_game(&mut g);
        prop_assert!(to_kripke(&m).check_serial().is_ok());
        let u = unfold1(&m);
        prop_assert_eq!(u.len(), 1 + m.len() * m.move_count());
        let reach = to_kripke(&u).reachable();
        for w in (0..u.len()).filter(|&w| w != u.initial && reach[w]) {
            for acts in &m.actions {
                prop_assert_eq!(acts.iter().filter(|a| u.labels[w].contains(*a)).count(), 1);
            }
        }
    }

    #[test]
    fn product_labels_one_closure_member_per_slot(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let atoms = alphabet(2);
        let mut k = g.kripke(4, &atoms);
        k.prefs.insert(1, g.description(&atoms, 3, 2));
        let tables = PrefTables::new(&k.prefs, &BTreeSet::from([1]), &k.vocabulary()).unwrap();
        let mb = build_mb(&k, &tables).unwrap();
        for (w, label) in mb.kripke.labels.iter().enumerate() {
            for s in &tables.slots {
                prop_assert_eq!(s.q_names.iter().filter(|q| label.contains(*q)).count(), 1);
                if w == mb.kripke.initial {
                    prop_assert!(label.contains(&s.q_names[0]));
                }
            }
        }
    }

    #[test]
    fn objective_updates_compose(seed in any::<u64>(), cut in 0usize..5) {
        let mut g = Gen::new(seed);
        let atoms = alphabet(2);
        let k = g.kripke(4, &atoms);
        let d = g.description(&atoms, 3, 2);
        let path = walk(&mut g, &k, 5);
        let whole = pref_update_path(&d, &path, &k).unwrap();
        let mid = pref_update_path(&d, &path[..=cut], &k).unwrap();
        let rest = Kripke { initial: path[cut], ..k.clone() };
        let d2 = PreferenceDescription { objectives: mid, better: d.better.clone() };
        prop_assert_eq!(pref_update_path(&d2, &path[cut..], &rest).unwrap(), whole);
    }
}
