use profitlab::mechanisms::{evaluate, search_best, Kind};
use profitlab::model::{full_mask, submasks};
use profitlab_harness::generate::{generate_corpus, CorpusParams, FamilyClass};
use profitlab_harness::io::{
    fmt_q, instance_json, parse_q, read_instance, read_spec, spec_json, InstanceFile, SpecFile,
};

fn params(families: FamilyClass) -> CorpusParams {
    CorpusParams { n: (1, 3), m: (1, 3), families, ..CorpusParams::default() }
}

#[test]
fn rationals_print_as_fractions() {
    assert_eq!(fmt_q(&parse_q("6/4").unwrap()), "3/2");
    assert_eq!(fmt_q(&parse_q(" 2 ").unwrap()), "2/1");
    assert!(parse_q("one half").is_err());
    assert!(parse_q("1/0").is_err());
}

#[test]
fn instances_round_trip_through_json() {
    for inst in generate_corpus(&params(FamilyClass::Mixed), 60, 7).unwrap() {
        let text = instance_json(&inst);
        let file: InstanceFile = serde_json::from_str(&text).unwrap();
        let back = file.to_instance().unwrap();
        assert_eq!(back.dists(), inst.dists());
        assert_eq!(back.atoms(), inst.atoms());
        for i in 0..inst.n() {
            assert!(submasks(full_mask(inst.m())).all(|s| back.family(i).contains(s) == inst.family(i).contains(s)));
        }
        assert_eq!(instance_json(&back), text);
    }
}

#[test]
fn specs_round_trip_and_evaluate_identically() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_corpus(&CorpusParams { n: (1, 1), ..params(FamilyClass::Mixed) }, 6, 3).unwrap();
    for (k, inst) in corpus.iter().enumerate() {
        let ipath = dir.path().join(format!("instance_{k}.json"));
        std::fs::write(&ipath, instance_json(inst)).unwrap();
        let inst = read_instance(&ipath).unwrap();
        for kind in [Kind::Ip, Kind::Pp, Kind::Pb] {
            let spec = search_best(&inst, kind, None).unwrap().spec;
            let spath = dir.path().join(format!("spec_{k}_{}.json", kind.name()));
            std::fs::write(&spath, spec_json(&spec)).unwrap();
            let back = read_spec(&spath, &inst).unwrap();
            assert_eq!(back, spec);
            assert_eq!(evaluate(&inst, &back).unwrap().profit, evaluate(&inst, &spec).unwrap().profit);
        }
    }
}

#[test]
fn malformed_files_are_rejected() {
    let good = instance_json(&generate_corpus(&params(FamilyClass::Additive), 1, 0).unwrap()[0]);
    let mut file: InstanceFile = serde_json::from_str(&good).unwrap();
    file.n += 1;
    assert!(file.to_instance().is_err());

    let mut file: InstanceFile = serde_json::from_str(&good).unwrap();
    file.dists[0][0].probs[0] = "7/3".into();
    assert!(file.to_instance().is_err());

    let bad_family = good.replace("\"additive\"", "\"bogus\"");
    assert!(serde_json::from_str::<InstanceFile>(&bad_family).is_err());
}

#[test]
fn specs_with_unknown_kinds_are_rejected() {
    let single = CorpusParams { n: (1, 1), ..params(FamilyClass::Additive) };
    let inst = generate_corpus(&single, 1, 0).unwrap().remove(0);
    let spec = search_best(&inst, Kind::Ip, None).unwrap().spec;
    let mut file = SpecFile::from_spec(&spec);
    file.kind = "auction".into();
    assert!(file.to_spec(&inst).is_err());
}
