//! Named example games bundled from the workspace `fixtures/` directory.

use crate::compose::ConstrainedRoutingGame;
use crate::game::CongestionGame;

pub const FISK_JSON: &str = include_str!("../../../fixtures/fisk.json");
pub const FISK_CRG_JSON: &str = include_str!("../../../fixtures/fisk.crg.json");
pub const FISK_SP_CRG_JSON: &str = include_str!("../../../fixtures/fisk_sp.crg.json");
pub const BRAESS_JSON: &str = include_str!("../../../fixtures/braess.json");
pub const BRAESS_CRG_JSON: &str = include_str!("../../../fixtures/braess.crg.json");
pub const EX41_JSON: &str = include_str!("../../../fixtures/ex41.json");
pub const EX45_JSON: &str = include_str!("../../../fixtures/ex45.json");
pub const EX46_M3_JSON: &str = include_str!("../../../fixtures/ex46_m3.json");
pub const FLAT_COSTS_JSON: &str = include_str!("../../../fixtures/flat_costs.json");

fn game(src: &str) -> CongestionGame {
    CongestionGame::from_json(src).expect("bundled fixture is valid")
}

fn crg(src: &str) -> ConstrainedRoutingGame {
    ConstrainedRoutingGame::from_json(src).expect("bundled fixture is valid")
}

/// Three OD pairs on a triangle; commodities `ab`, `ac`, `bc`.
pub fn fisk() -> CongestionGame {
    game(FISK_JSON)
}

pub fn fisk_crg() -> ConstrainedRoutingGame {
    crg(FISK_CRG_JSON)
}

/// Fisk's triangle with zero-cost bypasses making every commodity run `a → c`.
pub fn fisk_sp_crg() -> ConstrainedRoutingGame {
    crg(FISK_SP_CRG_JSON)
}

/// Wheatstone network in strategy form, single commodity `h1`.
pub fn braess() -> CongestionGame {
    game(BRAESS_JSON)
}

pub fn braess_crg() -> ConstrainedRoutingGame {
    crg(BRAESS_CRG_JSON)
}

/// Three parallel links `x+1, x, x+2`; `alpha` uses the top two, `beta` the bottom two.
pub fn ex41() -> CongestionGame {
    game(EX41_JSON)
}

/// Quadratic variant of [`ex41`].
pub fn ex45() -> CongestionGame {
    game(EX45_JSON)
}

/// `m = 3` parallel links `x+i`, three pinned commodities and one free one.
pub fn ex46_m3() -> CongestionGame {
    game(EX46_M3_JSON)
}

/// [`ex41`] with `c1 = c3 = 1`, `c2 = x`: multiple equilibria.
pub fn flat_costs() -> CongestionGame {
    game(FLAT_COSTS_JSON)
}

/// Looks a bundled fixture up by file stem (`fisk`, `braess`, `ex41`, ...).
pub fn by_name(name: &str) -> Option<&'static str> {
    Some(match name {
        "fisk" => FISK_JSON,
        "fisk.crg" => FISK_CRG_JSON,
        "fisk_sp.crg" => FISK_SP_CRG_JSON,
        "braess" => BRAESS_JSON,
        "braess.crg" => BRAESS_CRG_JSON,
        "ex41" => EX41_JSON,
        "ex45" => EX45_JSON,
        "ex46_m3" => EX46_M3_JSON,
        "flat_costs" => FLAT_COSTS_JSON,
        _ => return None,
    })
}
