//! Flipping the sign of every β must make verification fail. Lives in its
//! own test binary because the fault switch is process-wide.

use shtsynth::hooks::set_flip_beta_sign;
use shtsynth::BlockParams;
use shtsynth_cli::commands::cmd_verify;

#[test]
fn verify_catches_flipped_beta() {
    let params = BlockParams::default();
    assert!(cmd_verify(8, 1, 1, &params).unwrap().passed);

    set_flip_beta_sign(true);
    let broken = cmd_verify(8, 1, 1, &params).unwrap();
    set_flip_beta_sign(false);
    assert!(!broken.passed, "{}", broken.line());
    assert!(broken.max_rel_error > 1e-3);

    assert!(cmd_verify(8, 1, 1, &params).unwrap().passed);
}
