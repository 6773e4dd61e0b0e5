use isac_core::scenario::*;
use isac_core::Error;

#[test]
fn default_round_trips_through_toml() {
    let s = Scenario::default();
    let text = s.to_toml();
    let back = Scenario::from_toml(&text).unwrap();
    assert_eq!(back, s);
    assert_eq!(back.to_toml(), text);
}

#[test]
fn explicit_coefficients_round_trip() {
    let mut s = Scenario::default();
    s.target.contour = ContourSpec::Coefficients { m: vec![1.0, 0.1], n: vec![0.8, -0.05] };
    let back = Scenario::from_toml(&s.to_toml()).unwrap();
    assert_eq!(back, s);
    assert!(back.build().is_ok());
}

#[test]
fn invalid_scenarios_are_rejected() {
    let mut s = Scenario::default();
    s.array.n_t = 20;
    assert!(matches!(s.validate(), Err(Error::InvalidScenario(_))));
    let mut s = Scenario::default();
    s.target.contour = ContourSpec::Preset("submarine".into());
    assert!(s.validate().is_err());
    let mut s = Scenario::default();
    s.target.contour = ContourSpec::Coefficients { m: vec![-1.0], n: vec![1.0] };
    assert!(matches!(s.validate(), Err(Error::InvalidContour(_))));
    let text = Scenario::default().to_toml().replace("[solver]", "[solver]\nbogus = 1");
    assert!(matches!(Scenario::from_toml(&text), Err(Error::InvalidScenario(_))));
}

#[test]
fn radar_snr_hold_rescales_noise() {
    let mut s = Scenario::default();
    s.sensing.radar_snr_hold = true;
    let snr = s.radar_snr();
    let far = s.with_param(SweepKey::Range, 200.0).unwrap();
    assert!((far.radar_snr() / snr - 1.0).abs() < 1e-9);
    s.sensing.radar_snr_hold = false;
    let far = s.with_param(SweepKey::Range, 200.0).unwrap();
    assert_eq!(far.sensing.sigma_s2_dbm, s.sensing.sigma_s2_dbm);
}

#[test]
fn sweep_parameters_apply() {
    let s = Scenario::default();
    assert_eq!(s.with_param(SweepKey::Users, 2.0).unwrap().users(), 2);
    assert!(s.with_param(SweepKey::Users, 5.0).is_err());
    assert_eq!(s.with_param(SweepKey::Subsections, 3.0).unwrap().target.subsections, 3);
    assert_eq!(s.with_param(SweepKey::Gamma, 4.0).unwrap().constraints.gamma_db, 4.0);
    assert_eq!(s.with_param(SweepKey::Bandwidth, 2e7).unwrap().sensing.bandwidth_hz, 2e7);
}

#[test]
fn default_model_matches_parameter_list() {
    let m = Scenario::default().build().unwrap();
    assert_eq!((m.array.n_t, m.array.n_r), (16, 16));
    assert_eq!(m.channel.users(), 4);
    assert!((m.constraints.gamma - 10.0).abs() < 1e-12);
    assert!((m.constraints.sigma_n2 - 1e-11).abs() < 1e-24);
    assert!((m.channel.gains[0] - 1e-10).abs() < 1e-24);
    assert_eq!(m.partition.k(), 8);
    assert!((m.sensing.g - 1.0 / 729.0).abs() < 1e-15);
    assert_eq!(m.sensing_discrete().t_s, 32.0);
}
