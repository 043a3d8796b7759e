// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(katoreg::cli::run(std::env::args_os()));
}
