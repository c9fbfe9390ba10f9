//! Writes every preset as `<dir>/<name>.toml`.

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "scenarios".into());
    std::fs::create_dir_all(&dir).expect("create output directory");
    for spec in flockcert::presets::all() {
        let path = std::path::Path::new(&dir).join(format!("{}.toml", spec.name));
        std::fs::write(&path, flockcert::io::scenario_to_toml(&spec)).expect("write preset");
        println!("{}", path.display());
    }
}
