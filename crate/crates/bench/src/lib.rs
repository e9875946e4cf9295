//! Empty by design: this package only carries the criterion benchmarks in
//! `benches/`.
