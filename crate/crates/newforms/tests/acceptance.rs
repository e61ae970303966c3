use newforms::verify::{run_check, CHECK_IDS};

#[test]
fn acceptance_matrix() {
    let mut all_pass = true;
    let mut failures = Vec::new();
    for (i, id) in CHECK_IDS.iter().enumerate() {
        let check = run_check(id).expect("check ids are self-consistent");
        let pass = check.passed();
        println!(
            "criterion {:2}  {:24} {:5}  ({} cells)  {}",
            i + 1,
            id,
            if pass { "pass" } else { "FAIL" },
            check.cells.len(),
            check.title
        );
        if !pass {
            all_pass = false;
            for c in check.cells.iter().filter(|c| !c.pass) {
                println!("    {}: expected {} got {}", c.context, c.expected, c.got);
                failures.push(format!("{id}: {}", c.context));
            }
        }
    }
    assert!(all_pass, "failed cells: {failures:#?}");
}
