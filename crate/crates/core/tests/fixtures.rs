use std::fs;
use std::path::PathBuf;

use tabqa_core::metrics::{content_similarity, teds, ChrfScorer, StructureTree};
use tabqa_core::table_io::parse_html_table_with_warnings;
use tabqa_core::{
    parse_html_table, serialize_html, serialize_markdown, Axis, CoordTree, HierarchicalTable, KeyValueTriple,
    TreeCoord, Warning,
};
use tabqa_oracles::ted::brute_force_ted;

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/tables")
        .join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn coord(path: &[usize]) -> TreeCoord {
    TreeCoord::new(path.to_vec()).unwrap()
}

#[test]
fn cancer_sites_cell_key_value_and_coordinates() {
    let table = parse_html_table(&fixture("cancer_sites.html")).unwrap();
    assert_eq!(table.stub_header(), "Primary site");
    assert_eq!((table.rows(), table.cols()), (6, 6));
    let expected = KeyValueTriple::new(
        ["Urinary tract", "Kidney and renal pelvis"],
        ["Mortality", "Females"],
        "61, 276",
    );
    assert!(table.flatten_to_kv().contains(&expected));
    assert_eq!(table.cell(&coord(&[2, 0]), &coord(&[2, 1])).unwrap(), "61, 276");
    assert_eq!(
        table.left().resolve(&coord(&[2, 0])).unwrap(),
        ["Urinary tract", "Kidney and renal pelvis"]
    );
    assert_eq!(table.top().resolve(&coord(&[2, 1])).unwrap(), ["Mortality", "Females"]);
    assert!(table.validate().is_valid());
    assert!(!table.is_flat());
}

#[test]
fn cancer_sites_left_leaves_by_hand() {
    let table = parse_html_table(&fixture("cancer_sites.html")).unwrap();
    let leaves: Vec<Vec<usize>> = table.left().leaf_coords().iter().map(|c| c.path().to_vec()).collect();
    assert_eq!(
        leaves,
        vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![2, 0], vec![2, 1]]
    );
    assert_eq!(leaves.len(), table.rows());
}

#[test]
fn three_level_walk_by_hand() {
    let table = parse_html_table(&fixture("three_level.html")).unwrap();
    // Europe > {Germany > {Retail, Wholesale}, France > {Retail}}, Asia > {Japan > {Retail, Wholesale}}
    assert_eq!(
        table.left().resolve(&coord(&[0, 1, 0])).unwrap(),
        ["Europe", "France", "Retail"]
    );
    assert_eq!(
        table.left().resolve(&coord(&[1, 0, 1])).unwrap(),
        ["Asia", "Japan", "Wholesale"]
    );
    assert_eq!(table.left().leaf_count(), 5);
    assert_eq!(table.left().depth(), 3);
    assert_eq!(
        table.top().leaf_paths(),
        vec![vec!["Revenue", "FY2022"], vec!["Revenue", "FY2023"]]
    );
    assert_eq!(table.body()[4], ["", "188"]);
    let err = table.left().resolve(&coord(&[0, 2])).unwrap_err().to_string();
    assert!(err.contains("depth 1"), "{err}");
}

#[test]
fn flat_fixture_enumerated_by_hand() {
    let table = parse_html_table(&fixture("flat_2x2.html")).unwrap();
    assert!(table.is_flat());
    assert_eq!(
        table.flatten_to_kv(),
        vec![
            KeyValueTriple::new(["Cloud"], ["2022"], "$1,204"),
            KeyValueTriple::new(["Cloud"], ["2023"], "$1,517"),
            KeyValueTriple::new(["Devices"], ["2022"], "$880"),
            KeyValueTriple::new(["Devices"], ["2023"], "(12)"),
        ]
    );
    assert_eq!(
        serialize_markdown(&table),
        "| Segment | 2022 | 2023 |\n| --- | --- | --- |\n| Cloud | $1,204 | $1,517 |\n| Devices | $880 | (12) |\n"
    );
}

#[test]
fn repeated_totals_warn_but_validate() {
    let table = parse_html_table(&fixture("repeated_total.html")).unwrap();
    let report = table.validate();
    assert!(report.is_valid());
    assert!(report.warnings.contains(&Warning::DuplicateKeyPath {
        axis: Axis::Left,
        path: vec!["Total".into()],
    }));
}

#[test]
fn table_without_header_markup_uses_first_row_and_column() {
    let parsed = parse_html_table_with_warnings(&fixture("no_markup.html")).unwrap();
    let table = parsed.table;
    assert_eq!(table.stub_header(), "Metric");
    assert_eq!(
        table.left().leaf_paths(),
        vec![vec!["Employees"], vec!["Offices & labs"]]
    );
    assert_eq!(table.top().leaf_paths(), vec![vec!["Value"]]);
}

#[test]
fn every_fixture_round_trips() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/tables");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "html") {
            let table = parse_html_table(&fs::read_to_string(&path).unwrap()).unwrap();
            let back = parse_html_table(&serialize_html(&table)).unwrap();
            assert_eq!(back, table, "{}", path.display());
            assert_eq!(back.flatten_to_kv(), table.flatten_to_kv());
            seen += 1;
        }
    }
    assert!(seen >= 5);
}

fn flat(rows: &[&str], cols: &[&str], body: Vec<Vec<&str>>) -> HierarchicalTable {
    HierarchicalTable::new(
        "",
        CoordTree::flat(rows.to_vec()).unwrap(),
        CoordTree::flat(cols.to_vec()).unwrap(),
        body,
    )
    .unwrap()
}

#[test]
fn teds_of_single_relabel_on_flat_2x2() {
    let a = flat(&["r1", "r2"], &["c1", "c2"], vec![vec!["", ""], vec!["", ""]]);
    let b = flat(&["r1", "r2"], &["c1", "cX"], vec![vec!["", ""], vec!["", ""]]);
    // Root, two region nodes, two row leaves, two column leaves.
    assert_eq!(StructureTree::from_table(&a).node_count(), 7);
    assert_eq!(teds(&a, &b), 1.0 - 1.0 / 7.0);
}

#[test]
fn teds_of_disjoint_single_headers_keeps_the_skeleton() {
    let a = flat(&["a"], &["b"], vec![vec!["1"]]);
    let b = flat(&["c"], &["d"], vec![vec!["1"]]);
    let distance = brute_force_ted(
        StructureTree::from_table(&a).tree(),
        StructureTree::from_table(&b).tree(),
    );
    assert_eq!(distance, 2);
    assert_eq!(teds(&a, &b), 1.0 - distance as f64 / 5.0);
    assert!(teds(&a, &b) > 0.0);
}

#[test]
fn content_report_with_a_wrong_value_and_a_missing_row() {
    let gt = flat(
        &["A", "B", "C"],
        &["X", "Y"],
        vec![vec!["10", "11"], vec!["43", "44"], vec!["7", "8"]],
    );
    let generated = flat(&["A", "B"], &["X", "Y"], vec![vec!["10", "11"], vec!["43", "45"]]);
    let report = content_similarity(&generated, &gt, &ChrfScorer);
    // chrF("45", "44"): unigram F = 0.5, bigram F = 0; orders 3..6 have no
    // n-grams, so the mean is 0.25.
    let total = 3.0 + 0.25;
    assert!((report.precision - total / 4.0).abs() < 1e-12);
    assert!((report.recall - total / 6.0).abs() < 1e-12);
    assert!((report.f1 - 0.65).abs() < 1e-12);
}
