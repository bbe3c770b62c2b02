#![no_main]

use libfuzzer_sys::fuzz_target;
use mixtailor::matrix_csv::{parse_grad_matrix, write_grad_matrix};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_grad_matrix(text) {
        let dim = rows[0].dim();
        assert!(rows.iter().all(|r| r.dim() == dim && r.is_finite()));
        let mut out = Vec::new();
        write_grad_matrix(&mut out, &rows).unwrap();
        let again = parse_grad_matrix(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(again.len(), rows.len());
    }
});
