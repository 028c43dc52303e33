//! Running a scenario file through the command-line front end.

use std::io;

fn main() {
    let dir = std::env::temp_dir().join("concbound-scenario-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let spec = dir.join("runs.json");
    std::fs::write(
        &spec,
        r#"{
  "distributions": {
    "coin": {"family": "fair_coin"},
    "lazy": {"mixture": {"p": 0.5, "u": {"family": "fair_coin"}, "v": {"atoms": [[0, 1]]}}}
  },
  "runs": [
    {"command": "q", "params": {"dist": "lazy", "n": 10, "b": 1}},
    {"command": "sweep", "params": {"bound": "cor1", "dist": "lazy", "b": 1, "grid": {"n": [16, 64, 256]}}}
  ]
}"#,
    )
    .expect("write scenario");
    let code = concbound::cli::run(
        ["concbound", "run", "--spec", spec.to_str().unwrap()],
        &mut io::stdout(),
        &mut io::stderr(),
    );
    std::process::exit(code.into());
}
