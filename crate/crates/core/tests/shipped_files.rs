use phtel::analysis::PowerBudget;
use phtel::Scenario;

fn read(name: &str) -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/");
    std::fs::read_to_string(format!("{path}{name}")).unwrap()
}

#[test]
fn fig2_file_matches_builtin() {
    assert_eq!(
        Scenario::from_toml(&read("fig2.toml")).unwrap(),
        Scenario::fig2()
    );
}

#[test]
fn table_file_matches_builtin() {
    assert_eq!(
        PowerBudget::from_toml(&read("table_i.toml")).unwrap(),
        PowerBudget::table_i()
    );
}

#[test]
fn lossy_scenario_is_valid() {
    let s = Scenario::from_toml(&read("lossy.toml")).unwrap();
    assert_eq!(s.windows().len(), 2);
    assert_eq!(s.link().drop_prob, 0.1);
}
