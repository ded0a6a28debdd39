use ancient_mcf::config::{parse_config, parse_real, ModelSpec};
use ancient_mcf_core::spectrum::ModeCount;

#[test]
fn defaults_describe_the_reference_catenoid() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg.model, ModelSpec::Catenoid { v_max: 12.0 });
    assert!((cfg.radius - 5f64.sinh()).abs() < 1e-12);
    assert_eq!((cfg.n_v, cfg.n_theta, cfg.workers), (401, 8, 1));
    assert_eq!(cfg.modes, ModeCount::All);
    assert_eq!(cfg.sweep.radii.len(), 3);
}

#[test]
fn reals_accept_sinh_expressions() {
    assert_eq!(parse_real("2.5"), Some(2.5));
    assert_eq!(parse_real(" sinh(3) "), Some(3f64.sinh()));
    assert_eq!(parse_real("sinh(x)"), None);
    assert_eq!(parse_real("inf"), None);
}

#[test]
fn hash_ignores_output_and_workers_but_not_numerics() {
    let a = parse_config("[mesh]\nR = sinh(3)\nn_v = 61\n[run]\nworkers = 1\n[output]\ndir = a\n").unwrap();
    let b = parse_config("[output]\ndir = elsewhere\n[run]\nworkers = 8\n[mesh]\nn_v = 61\nR = sinh(3)\n").unwrap();
    let c = parse_config("[mesh]\nR = sinh(3)\nn_v = 81\n").unwrap();
    assert_eq!(a.hash, b.hash);
    assert_ne!(a.hash, c.hash);
    assert_eq!(a.hash.len(), 64);
}

#[test]
fn unknown_and_malformed_keys_name_the_culprit() {
    for (text, needle) in [
        ("[mesh]\nbogus = 1\n", "bogus"),
        ("[nowhere]\nx = 1\n", "nowhere"),
        ("[mesh]\nn_v = many\n", "n_v"),
        ("[geometry]\nmodel = torus\n", "model"),
        ("[run]\nworkers = 0\n", "workers"),
        ("[spectrum]\nk = 0\n", "k"),
        ("[ancient]\npicard_tol = -1\n", "picard_tol"),
    ] {
        let e = parse_config(text).unwrap_err().to_string();
        assert!(e.contains(needle), "{text:?}: {e}");
    }
    assert!(parse_config("[mesh]\nn_v = 61\nn_v = 81\n").is_err());
}

#[test]
fn synthetic_models_and_lists_parse() {
    let cfg = parse_config(
        "[geometry]\nmodel = synthetic\npotential = sech2\ndepth = 6\ncircumference = 2.5\nlength = 12\n[ancient]\na = 1e-3, 1e-2\nnonlinearity = model\n[sweep]\nR = 4, 5, 6\n",
    )
    .unwrap();
    assert!(matches!(cfg.model, ModelSpec::Synthetic { .. }));
    assert_eq!(cfg.a, Some(vec![1e-3, 1e-2]));
    assert_eq!(cfg.sweep.radii, vec![4.0, 5.0, 6.0]);
}
