//! Links reference BLAS/LAPACK for Clarabel's SDP support. OpenBLAS 0.3.20
//! picks kernels on AVX-512 machines that break PSD cone scaling, so the
//! static netlib archives are preferred when present.

use std::path::Path;

const DIRS: [&str; 2] = ["/usr/lib/x86_64-linux-gnu", "/usr/lib64"];

fn main() {
    println!("cargo:rerun-if-env-changed=TCFREE_BLAS");
    if let Ok(spec) = std::env::var("TCFREE_BLAS") {
        // Comma-separated library names, e.g. "openblas" or "lapack,blas".
        for lib in spec.split(',') {
            println!("cargo:rustc-link-lib={lib}");
        }
        return;
    }
    for dir in DIRS {
        let lapack = Path::new(dir).join("lapack/liblapack.a");
        let blas = Path::new(dir).join("blas/libblas.a");
        if lapack.exists() && blas.exists() {
            println!("cargo:rustc-link-search=native={dir}/lapack");
            println!("cargo:rustc-link-search=native={dir}/blas");
            println!("cargo:rustc-link-lib=static=lapack");
            println!("cargo:rustc-link-lib=static=blas");
            println!("cargo:rustc-link-lib=dylib=gfortran");
            return;
        }
    }
    println!("cargo:rustc-link-lib=lapack");
    println!("cargo:rustc-link-lib=blas");
}
