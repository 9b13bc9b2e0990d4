use pamlab::config::{Config, Experiment};
use pamlab::estimator::SampleSet;
use pamlab::harness::{check_abort_budget, checkpoint_merge, evaluate, run_partial, Abort, Partial};
use pamlab::Error;

fn small(n: u64) -> Config {
    let mut c = Config::preset(Experiment::Gap);
    c.replicas = n;
    c.grid.spacing = 0.25;
    c.grid.resolution = 0.5;
    c.grid.margin = 3.0;
    c.points = vec![-1.0, 0.0, 1.0, 4.0];
    c
}

/// Replicas `[lo, hi)` of `cfg`, computed independently.
fn slice(cfg: &Config, lo: u64, hi: u64) -> Partial {
    let mut c = cfg.clone();
    c.replicas = hi;
    let skip = Partial {
        config_hash: pamlab::harness::config_hash(cfg).unwrap(),
        observable: cfg.observable().unwrap(),
        samples: SampleSet::from_rows(
            match cfg.observable().unwrap() {
                pamlab::config::Observable::Points(p) => p,
                pamlab::config::Observable::MaxProfile(r) => r,
            },
            Vec::new(),
        )
        .unwrap(),
        aborted: (0..lo)
            .map(|r| Abort {
                replica: r,
                reason: "skip".into(),
            })
            .collect(),
    };
    let mut p = run_partial(&c, 1, Some(&skip)).unwrap();
    p.aborted.retain(|a| a.replica >= lo);
    p
}

fn empty_like(p: &Partial) -> Partial {
    Partial {
        samples: p.samples.filter_replicas(|_| false),
        aborted: Vec::new(),
        ..p.clone()
    }
}

#[test]
fn merge_with_empty_is_identity() {
    let cfg = small(20);
    let p = run_partial(&cfg, 1, None).unwrap();
    let e = empty_like(&p);
    assert_eq!(checkpoint_merge(&p, &e).unwrap(), p);
    assert_eq!(checkpoint_merge(&e, &p).unwrap(), p);
}

#[test]
fn merge_commutes_on_all_statistics() {
    let cfg = small(60);
    let (a, b) = (slice(&cfg, 0, 25), slice(&cfg, 25, 60));
    let ab = checkpoint_merge(&a, &b).unwrap();
    let ba = checkpoint_merge(&b, &a).unwrap();
    assert_eq!(ab, ba);
    assert_eq!(evaluate(&cfg, &ab).unwrap(), evaluate(&cfg, &ba).unwrap());
}

#[test]
fn three_way_split_of_ten_thousand_equals_one_run() {
    let cfg = small(10_000);
    let whole = run_partial(&cfg, 0, None).unwrap();
    let parts = [slice(&cfg, 0, 3_333), slice(&cfg, 3_333, 7_000), slice(&cfg, 7_000, 10_000)];
    let merged = checkpoint_merge(&checkpoint_merge(&parts[2], &parts[0]).unwrap(), &parts[1]).unwrap();
    assert_eq!(merged, whole);
    assert_eq!(evaluate(&cfg, &merged).unwrap(), evaluate(&cfg, &whole).unwrap());
}

#[test]
fn aborted_replicas_contribute_nothing() {
    let cfg = small(40);
    let p = run_partial(&cfg, 1, None).unwrap();
    let mut with_abort = p.clone();
    with_abort.aborted.push(Abort {
        replica: 40,
        reason: "numeric error: injected".into(),
    });
    assert_eq!(
        evaluate(&cfg, &with_abort).unwrap().results,
        evaluate(&cfg, &p).unwrap().results
    );
    // One abort in 41 replicas is far above the 0.1% budget.
    assert!(matches!(check_abort_budget(&with_abort), Err(Error::Numeric(_))));

    let mut clash = empty_like(&p);
    clash.aborted.push(Abort {
        replica: 3,
        reason: "x".into(),
    });
    assert!(matches!(checkpoint_merge(&p, &clash), Err(Error::Contract(_))));
}

#[test]
fn hash_mismatch_is_a_contract_error() {
    let a = run_partial(&small(5), 1, None).unwrap();
    let mut cfg = small(5);
    cfg.t = 1.0;
    let b = run_partial(&cfg, 1, None).unwrap();
    assert!(matches!(checkpoint_merge(&a, &b), Err(Error::Contract(_))));
}

#[test]
fn partial_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = run_partial(&small(7), 1, None).unwrap();
    let path = dir.path().join("partial.json");
    p.save(&path).unwrap();
    assert_eq!(Partial::load(&path).unwrap(), p);
}
