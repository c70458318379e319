//! Writes a self-contained demo workspace: training corpora, labeled
//! calibration corpora, a benchmark with pre-generated responses, and two
//! run configs (defense off / defense on).
//!
//! Usage: cargo run --release -p gauntlet-core --example demo_setup -- demo

use std::path::Path;

use gauntlet_core::synth;

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "demo".to_string());
    let root = Path::new(&dir);
    std::fs::create_dir_all(root)?;

    std::fs::write(
        root.join("train.txt"),
        synth::clean_training_corpus(120_000, 0xA11CE).join("\n"),
    )?;
    std::fs::write(root.join("ai.txt"), synth::ai_corpus(300, 0xB0B).join("\n"))?;
    std::fs::write(
        root.join("human.txt"),
        synth::human_corpus(300, 0xCAFE).join("\n"),
    )?;

    let items: Vec<String> = synth::ai_corpus(100, 0xFEED)
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            serde_json::json!({
                "id": format!("demo-{i}"),
                "question": format!("Describe topic number {i}."),
                "response": text
            })
            .to_string()
        })
        .collect();
    std::fs::write(root.join("bench.jsonl"), items.join("\n"))?;

    for (file, defense) in [("run.json", false), ("run_defense.json", true)] {
        let config = serde_json::json!({
            "benchmarks": [{"path": format!("{dir}/bench.jsonl"), "format": "json_lines"}],
            "strategies": [
                {"kind": "noprompt"},
                {"kind": "spaceinfi"},
                {"kind": "period-insert"},
                {"kind": "plural-flip"}
            ],
            "detectors": [
                {"kind": "perplexity", "model": format!("{dir}/lm.bin"),
                 "calibration": {"ai": format!("{dir}/ai.txt"), "human": format!("{dir}/human.txt")}},
                {"kind": "classifier", "model": format!("{dir}/clf.bin")}
            ],
            "defense": {"enabled": defense},
            "seed": 42,
            "output_dir": format!("{dir}/out{}", if defense { "_defense" } else { "" })
        });
        std::fs::write(
            root.join(file),
            serde_json::to_string_pretty(&config).unwrap(),
        )?;
    }

    println!("demo workspace written to {dir}/");
    println!("next:");
    println!("  cargo run --release -p gauntlet-core --bin gauntlet -- train-lm --corpus {dir}/train.txt --order 4 --alpha 0.1 --mode char --out {dir}/lm.bin");
    println!("  cargo run --release -p gauntlet-core --bin gauntlet -- train-clf --ai {dir}/ai.txt --human {dir}/human.txt --out {dir}/clf.bin");
    println!(
        "  cargo run --release -p gauntlet-core --bin gauntlet -- eval --config {dir}/run.json"
    );
    Ok(())
}
