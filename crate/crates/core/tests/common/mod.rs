//! Independent oracles shared by the integration tests. Everything here
//! recomputes expectations from first principles (plain recursion, exhaustive
//! enumeration, a dense matrix-game LP) rather than calling the library code
//! paths under test.

#![allow(dead_code)]

use dlsolve::game::{GameTree, NodeKind, Player, StateId};

/// Expected payoff to player 1 by direct recursion. `strat` supplies the
/// action probabilities for a player's infoset key.
pub fn ev_recursive<F>(game: &GameTree, s: StateId, strat: &F) -> f64
where
    F: Fn(Player, &str) -> Vec<f64>,
{
    match game.kind(s) {
        NodeKind::Terminal => game.utility(s, Player::P1).unwrap(),
        NodeKind::Chance => {
            let probs = game.chance_distribution(s).unwrap().to_vec();
            game.children(s)
                .zip(probs)
                .map(|(c, p)| p * ev_recursive(game, c, strat))
                .sum()
        }
        NodeKind::Decision(p) => {
            let probs = strat(p, game.infoset_key(s, p));
            assert_eq!(probs.len(), game.num_actions(s));
            game.children(s)
                .zip(probs)
                .map(|(c, pr)| pr * ev_recursive(game, c, strat))
                .sum()
        }
    }
}

/// Value of a zero-sum matrix game for the row player, via the classic
/// linear program on the shifted-positive matrix, solved with a dense
/// tableau simplex (Bland's rule, so it cannot cycle).
pub fn matrix_game_value(payoff: &[Vec<f64>]) -> f64 {
    let n = payoff.len();
    let m = payoff[0].len();
    let shift = payoff.iter().flatten().fold(0.0f64, |a, &b| a.min(b)).abs() + 1.0;
    // Column player's LP: maximize sum(q) subject to (A + shift) q <= 1,
    // q >= 0. The optimum equals 1 / (value + shift).
    let cols = m + n + 1;
    let mut t = vec![vec![0.0f64; cols]; n + 1];
    for i in 0..n {
        for j in 0..m {
            t[i][j] = payoff[i][j] + shift;
        }
        t[i][m + i] = 1.0;
        t[i][cols - 1] = 1.0;
    }
    for j in 0..m {
        t[n][j] = -1.0;
    }
    loop {
        let mut enter = usize::MAX;
        for j in 0..m + n {
            if t[n][j] < -1e-12 {
                enter = j;
                break;
            }
        }
        if enter == usize::MAX {
            break;
        }
        let mut leave = usize::MAX;
        let mut best = f64::INFINITY;
        for i in 0..n {
            if t[i][enter] > 1e-12 {
                let r = t[i][cols - 1] / t[i][enter];
                if r < best - 1e-12 {
                    best = r;
                    leave = i;
                }
            }
        }
        assert!(leave != usize::MAX, "unbounded matrix-game LP");
        let piv = t[leave][enter];
        for v in t[leave].iter_mut() {
            *v /= piv;
        }
        for i in 0..=n {
            if i != leave {
                let f = t[i][enter];
                if f != 0.0 {
                    for j in 0..cols {
                        t[i][j] -= f * t[leave][j];
                    }
                }
            }
        }
    }
    1.0 / t[n][cols - 1] - shift
}

/// All deterministic action assignments for `player`'s acting infosets,
/// each as a map from infoset key to chosen action index.
pub fn enumerate_pure_strategies(
    game: &GameTree,
    player: Player,
) -> Vec<std::collections::HashMap<String, usize>> {
    let mut keys: Vec<(String, usize)> = game
        .acting_classes(player)
        .map(|c| {
            let class = game.class(c);
            (class.key.clone(), class.actions.len())
        })
        .collect();
    keys.sort();
    let mut out = vec![std::collections::HashMap::new()];
    for (key, n) in keys {
        let mut next = Vec::with_capacity(out.len() * n);
        for assignment in out {
            for a in 0..n {
                let mut copy = assignment.clone();
                copy.insert(key.clone(), a);
                next.push(copy);
            }
        }
        out = next;
    }
    out
}

/// Uniform-random behavioral strategy lookup for `ev_recursive`.
pub fn uniform(game: &GameTree) -> impl Fn(Player, &str) -> Vec<f64> + '_ {
    |p: Player, key: &str| {
        let class = game.class(game.class_by_key(key).unwrap());
        assert_eq!(class.player, p);
        vec![1.0 / class.actions.len() as f64; class.actions.len()]
    }
}

pub fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: got {actual}, expected {expected} (tolerance {tol})"
    );
}

/// Best-response value for `player` against the other side of `profile`,
/// found by enumerating every pure strategy. Exponential; small games only.
pub fn pure_br_value(
    game: &GameTree,
    profile: &dlsolve::strategy::StrategyProfile,
    player: Player,
) -> f64 {
    let opponent = player.other();
    let mut best = f64::NEG_INFINITY;
    for pure in enumerate_pure_strategies(game, player) {
        let lookup = |p: Player, key: &str| -> Vec<f64> {
            if p == player {
                let class = game.class(game.class_by_key(key).unwrap());
                let mut row = vec![0.0; class.actions.len()];
                row[pure[key]] = 1.0;
                row
            } else {
                profile.get(opponent).lookup(key).unwrap().to_vec()
            }
        };
        let v1 = ev_recursive(game, game.root(), &lookup);
        best = best.max(player.sign() * v1);
    }
    best
}

/// Exploitability of a profile in chips: the mean of both sides'
/// best-response values, computed by pure-strategy enumeration.
pub fn pure_exploitability(game: &GameTree, profile: &dlsolve::strategy::StrategyProfile) -> f64 {
    (pure_br_value(game, profile, Player::P1) + pure_br_value(game, profile, Player::P2)) / 2.0
}
