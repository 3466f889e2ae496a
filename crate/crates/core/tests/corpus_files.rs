//! The JSON games under `corpus/` must describe exactly the built-in tiny
//! games. Run with `REPVAL_BLESS=1` to regenerate the files.

use std::path::PathBuf;

use repval_core::games::json::GameFile;
use repval_core::values::corpus::tiny_games;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn shipped_corpus_matches_builtin_games() {
    let bless = std::env::var_os("REPVAL_BLESS").is_some();
    for (name, g) in tiny_games() {
        let path = corpus_dir().join(format!("{name}.json"));
        let file = GameFile::to_accept_list(&g).unwrap();
        if bless {
            let mut text = serde_json::to_string_pretty(&file).unwrap();
            text.push('\n');
            std::fs::write(&path, text).unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let shipped: GameFile = serde_json::from_str(&text).unwrap();
        let back = shipped.into_game().unwrap();
        assert_eq!(back.accepted_indices().unwrap(), g.accepted_indices().unwrap(), "{name}: predicate differs");
        assert_eq!(back.mu(), g.mu(), "{name}: input distribution differs");
        assert_eq!((back.inputs(), back.outputs()), (g.inputs(), g.outputs()), "{name}: alphabets differ");
    }
}

#[test]
fn corpus_has_no_stray_files() {
    let names: Vec<String> = tiny_games().into_iter().map(|(n, _)| format!("{n}.json")).collect();
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let f = entry.unwrap().file_name().into_string().unwrap();
        if f.ends_with(".json") {
            assert!(names.contains(&f), "corpus/{f} is not one of the built-in games");
        }
    }
}
