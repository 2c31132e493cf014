#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    gca_core::fuzz_support::cli_arguments(data);
});
