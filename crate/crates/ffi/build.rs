use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let header = crate_dir.join("include").join("hkserver.h");

    let mut config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("HKSERVER_H".into()),
        cpp_compat: true,
        documentation: true,
        header: Some("/* C interface to the hkserver simulation library. */".into()),
        ..Default::default()
    };
    config.enumeration.prefix_with_name = true;

    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("header generation failed")
        .write_to_file(header);

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=build.rs");
}
