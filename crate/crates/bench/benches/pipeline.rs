use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use atlscpref_core::atlsc::{translate_atlsc, TranslateOptions};
use atlscpref_core::check::{atlsc_bounded_eval, ctlstar_check, direct_pref_check};
use atlscpref_core::gen::{alphabet, Gen, Vocab};
use atlscpref_core::gnf::{closure, gnf};
use atlscpref_core::models::{build_mb, load_model, Kripke, Model, PrefTables};
use atlscpref_core::pref_elim::{eliminate_preference, PrefElimOptions};
use atlscpref_core::{parse, Formula};

const PENNIES: &str = "agents: 1 2\nactions 1: h1 t1\nactions 2: h2 t2\nstates: s w l\ninit: s\n\
label w: win\nlabel l: lose\n\
outcome s h1 h2 -> w\noutcome s h1 t2 -> l\noutcome s t1 h2 -> l\noutcome s t1 t2 -> w\n\
outcome w h1 h2 -> w\noutcome w h1 t2 -> w\noutcome w t1 h2 -> w\noutcome w t1 t2 -> w\n\
outcome l h1 h2 -> l\noutcome l h1 t2 -> l\noutcome l t1 h2 -> l\noutcome l t1 t2 -> l\n";

fn normal_forms(c: &mut Criterion) {
    let b = parse("G (p -> F q) & (r U (p & X q))").unwrap();
    c.bench_function("gnf", |z| z.iter(|| gnf(black_box(&b)).unwrap()));
    c.bench_function("closure", |z| z.iter(|| closure(black_box(&b)).unwrap()));
}

fn instance(seed: u64) -> (Kripke, Formula) {
    let mut g = Gen::new(seed);
    let atoms = alphabet(3);
    let mut k = g.kripke(5, &atoms);
    let d = g.description(&atoms, 3, 2);
    let v = Vocab { atoms, pref_agents: vec![1], classes: d.objectives.clone(), ..Default::default() };
    k.prefs.insert(1, d);
    let f = g.state(&v, 4);
    (k, f)
}

fn preference(c: &mut Criterion) {
    let (k, f) = instance(2024);
    let agents = BTreeSet::from([1]);
    c.bench_function("product_and_elimination", |z| {
        z.iter(|| {
            let tables = PrefTables::new(&k.prefs, &agents, &k.vocabulary()).unwrap();
            let mb = build_mb(&k, &tables).unwrap();
            let out = eliminate_preference(&f, &tables, PrefElimOptions::default()).unwrap();
            ctlstar_check(&mb.kripke, &out).unwrap()
        })
    });
    c.bench_function("direct_preference_check", |z| z.iter(|| direct_pref_check(&k, &k.prefs, black_box(&f)).unwrap()));
}

fn strategies(c: &mut Criterion) {
    let Ok(Model::Cgm(m)) = load_model(PENNIES) else { panic!("bad game") };
    let f = parse("<<1>> ([[2]] F win | <<2>> F lose)").unwrap();
    c.bench_function("translate_strategies", |z| z.iter(|| translate_atlsc(&f, &m, TranslateOptions::default()).unwrap()));
    c.bench_function("bounded_strategy_oracle", |z| z.iter(|| atlsc_bounded_eval(&m, black_box(&f), 1).unwrap()));
}

criterion_group!(benches, normal_forms, preference, strategies);
criterion_main!(benches);
