//! Built-in game generators: matching pennies, Kuhn poker, Leduc hold'em, and
//! a parameterized single-street river endgame.

use super::{Action, ChanceOutcome, ExtensiveFormGame, GameError, Node, Player, Rational};
use std::collections::HashMap;

struct GameBuilder {
    nodes: Vec<Node>,
    infosets: HashMap<(Player, String), usize>,
    next_id: [usize; 2],
}

impl GameBuilder {
    fn new() -> Self {
        GameBuilder { nodes: Vec::new(), infosets: HashMap::new(), next_id: [0, 0] }
    }

    fn reserve(&mut self) -> usize {
        self.nodes.push(Node::Terminal { payoff: Rational::from_integer(0) });
        self.nodes.len() - 1
    }

    fn terminal(&mut self, payoff: Rational) -> usize {
        self.nodes.push(Node::Terminal { payoff });
        self.nodes.len() - 1
    }

    fn infoset(&mut self, player: Player, key: String) -> usize {
        let slot = if player == Player::X { 0 } else { 1 };
        let next = &mut self.next_id[slot];
        *self.infosets.entry((player, key)).or_insert_with(|| {
            let id = *next;
            *next += 1;
            id
        })
    }

    fn decision(&mut self, at: usize, player: Player, key: String, actions: Vec<Action>) {
        let infoset = self.infoset(player, key);
        self.nodes[at] = Node::Decision { player, infoset, actions };
    }

    fn chance(&mut self, at: usize, outcomes: Vec<ChanceOutcome>) {
        self.nodes[at] = Node::Chance { outcomes };
    }

    fn finish(self) -> ExtensiveFormGame {
        ExtensiveFormGame::new(self.nodes)
    }
}

/// One-shot matching pennies as a two-level game tree. The row player wins on
/// a match: payoffs `[[1, -1], [-1, 1]]`.
pub fn matching_pennies() -> ExtensiveFormGame {
    let mut b = GameBuilder::new();
    let root = b.reserve();
    let mut x_actions = Vec::new();
    for xa in ["heads", "tails"] {
        let ynode = b.reserve();
        let mut y_actions = Vec::new();
        for ya in ["heads", "tails"] {
            let pay = if xa == ya { 1 } else { -1 };
            let t = b.terminal(Rational::from_integer(pay));
            y_actions.push(Action { label: ya.to_string(), child: t });
        }
        b.decision(ynode, Player::Y, "guess".to_string(), y_actions);
        x_actions.push(Action { label: xa.to_string(), child: ynode });
    }
    b.decision(root, Player::X, "pick".to_string(), x_actions);
    b.finish()
}

/// Three-card Kuhn poker: ante 1, a single bet of 1, one betting round.
pub fn kuhn_poker() -> ExtensiveFormGame {
    const NAMES: [&str; 3] = ["J", "Q", "K"];
    let mut b = GameBuilder::new();
    let root = b.reserve();
    let mut outcomes = Vec::new();
    for cx in 0..3usize {
        for cy in 0..3usize {
            if cx == cy {
                continue;
            }
            let deal = b.reserve();
            build_kuhn_betting(&mut b, deal, cx, cy);
            outcomes.push(ChanceOutcome {
                label: format!("{}{}", NAMES[cx], NAMES[cy]),
                prob: Rational::new(1, 6),
                child: deal,
            });
        }
    }
    b.chance(root, outcomes);
    b.finish()
}

fn build_kuhn_betting(b: &mut GameBuilder, at: usize, cx: usize, cy: usize) {
    let win = |pot: i64| if cx > cy { pot } else { -pot };

    // After X checks: Y checks (showdown, pot 1) or bets.
    let after_check = b.reserve();
    let y_check = b.terminal(Rational::from_integer(win(1)));
    let after_check_bet = b.reserve();
    let fold = b.terminal(Rational::from_integer(-1));
    let call = b.terminal(Rational::from_integer(win(2)));
    b.decision(
        after_check_bet,
        Player::X,
        format!("{cx}:kb"),
        vec![
            Action { label: "fold".into(), child: fold },
            Action { label: "call".into(), child: call },
        ],
    );
    b.decision(
        after_check,
        Player::Y,
        format!("{cy}:k"),
        vec![
            Action { label: "check".into(), child: y_check },
            Action { label: "bet".into(), child: after_check_bet },
        ],
    );

    // After X bets: Y folds or calls.
    let after_bet = b.reserve();
    let y_fold = b.terminal(Rational::from_integer(1));
    let y_call = b.terminal(Rational::from_integer(win(2)));
    b.decision(
        after_bet,
        Player::Y,
        format!("{cy}:b"),
        vec![
            Action { label: "fold".into(), child: y_fold },
            Action { label: "call".into(), child: y_call },
        ],
    );

    b.decision(
        at,
        Player::X,
        format!("{cx}:"),
        vec![
            Action { label: "check".into(), child: after_check },
            Action { label: "bet".into(), child: after_bet },
        ],
    );
}

/// Leduc hold'em: six cards (three ranks, two suits), ante 1, two betting
/// rounds with bet sizes 2 and 4 and at most two bets/raises per round, one
/// public card between the rounds.
pub fn leduc_holdem() -> ExtensiveFormGame {
    let mut b = GameBuilder::new();
    let root = b.reserve();
    let mut outcomes = Vec::new();
    for cx in 0..6usize {
        for cy in 0..6usize {
            if cx == cy {
                continue;
            }
            let deal = b.reserve();
            let state = LeducState {
                cx,
                cy,
                board: None,
                round: 1,
                to_act: Player::X,
                other_checked: false,
                raises: 0,
                contrib: [1, 1],
                history: String::new(),
            };
            build_leduc(&mut b, deal, state);
            outcomes.push(ChanceOutcome {
                label: format!("d{cx}{cy}"),
                prob: Rational::new(1, 30),
                child: deal,
            });
        }
    }
    b.chance(root, outcomes);
    b.finish()
}

#[derive(Clone)]
struct LeducState {
    cx: usize,
    cy: usize,
    board: Option<usize>,
    round: u8,
    to_act: Player,
    /// Whether the other player already checked in this round.
    other_checked: bool,
    /// Bets and raises made so far in this round.
    raises: usize,
    /// Total chips committed by each player, antes included.
    contrib: [i64; 2],
    history: String,
}

impl LeducState {
    fn bet_size(&self) -> i64 {
        if self.round == 1 {
            2
        } else {
            4
        }
    }

    fn key(&self, player: Player) -> String {
        let own = if player == Player::X { self.cx } else { self.cy };
        match self.board {
            Some(bd) => format!("{own}|{bd}|{}", self.history),
            None => format!("{own}|-|{}", self.history),
        }
    }

    fn idx(&self, player: Player) -> usize {
        if player == Player::X {
            0
        } else {
            1
        }
    }
}

fn leduc_showdown(s: &LeducState) -> Rational {
    let board = s.board.expect("showdown requires a board card");
    let rank = |c: usize| c / 2;
    let (rx, ry, rb) = (rank(s.cx), rank(s.cy), rank(board));
    let stake = s.contrib[1]; // equal to contrib[0] at showdown
    let sign = if rx == rb {
        1
    } else if ry == rb {
        -1
    } else if rx > ry {
        1
    } else if rx < ry {
        -1
    } else {
        0
    };
    Rational::from_integer(sign * stake)
}

fn leduc_end_round(b: &mut GameBuilder, at: usize, s: &LeducState) {
    if s.round == 1 {
        // Public card from the four remaining.
        let mut outcomes = Vec::new();
        for card in 0..6usize {
            if card == s.cx || card == s.cy {
                continue;
            }
            let next = b.reserve();
            let mut ns = s.clone();
            ns.board = Some(card);
            ns.round = 2;
            ns.to_act = Player::X;
            ns.other_checked = false;
            ns.raises = 0;
            ns.history.push('/');
            build_leduc(b, next, ns);
            outcomes.push(ChanceOutcome {
                label: format!("board{card}"),
                prob: Rational::new(1, 4),
                child: next,
            });
        }
        b.chance(at, outcomes);
    } else {
        let pay = leduc_showdown(s);
        b.nodes[at] = Node::Terminal { payoff: pay };
    }
}

fn build_leduc(b: &mut GameBuilder, at: usize, s: LeducState) {
    let me = s.idx(s.to_act);
    let opp = 1 - me;
    let deficit = s.contrib[opp] - s.contrib[me];
    let mut actions = Vec::new();

    if deficit == 0 {
        // No outstanding bet: check or open.
        if s.other_checked {
            let child = b.reserve();
            let mut ns = s.clone();
            ns.history.push('k');
            leduc_end_round(b, child, &ns);
            actions.push(Action { label: "check".into(), child });
        } else {
            let child = b.reserve();
            let mut ns = s.clone();
            ns.history.push('k');
            ns.to_act = other(s.to_act);
            ns.other_checked = true;
            build_leduc(b, child, ns);
            actions.push(Action { label: "check".into(), child });
        }
        let child = b.reserve();
        let mut ns = s.clone();
        ns.contrib[me] += s.bet_size();
        ns.raises = 1;
        ns.history.push('b');
        ns.to_act = other(s.to_act);
        ns.other_checked = false;
        build_leduc(b, child, ns);
        actions.push(Action { label: "bet".into(), child });
    } else {
        // Facing a bet: fold, call, or raise while under the cap.
        let loss = s.contrib[me];
        let pay = if s.to_act == Player::X { -loss } else { loss };
        let fold = b.terminal(Rational::from_integer(pay));
        actions.push(Action { label: "fold".into(), child: fold });

        let child = b.reserve();
        let mut ns = s.clone();
        ns.contrib[me] += deficit;
        ns.history.push('c');
        leduc_end_round(b, child, &ns);
        actions.push(Action { label: "call".into(), child });

        if s.raises < 2 {
            let child = b.reserve();
            let mut ns = s.clone();
            ns.contrib[me] += deficit + s.bet_size();
            ns.raises += 1;
            ns.history.push('r');
            ns.to_act = other(s.to_act);
            build_leduc(b, child, ns);
            actions.push(Action { label: "raise".into(), child });
        }
    }

    let key = s.key(s.to_act);
    b.decision(at, s.to_act, key, actions);
}

fn other(p: Player) -> Player {
    match p {
        Player::X => Player::Y,
        Player::Y => Player::X,
    }
}

/// Parameters for the single-street river endgame generator.
#[derive(Debug, Clone)]
pub struct RiverParams {
    /// Ranks each player's hand is drawn from.
    pub num_ranks: usize,
    /// Pot at the start of the street; each player has contributed half.
    pub pot: f64,
    /// Chips each player has behind.
    pub stack: f64,
    /// Pot-fraction bet sizes per raise level; the last level repeats when
    /// the cap allows deeper raising.
    pub bet_fractions: Vec<Vec<f64>>,
    /// Maximum number of bets and raises on the street.
    pub raise_cap: usize,
    /// Joint weight of each ordered `(x_rank, y_rank)` pair; uniform when
    /// absent. Normalized internally.
    pub hand_weights: Option<Vec<Vec<f64>>>,
    pub big_blind: Option<f64>,
}

impl Default for RiverParams {
    fn default() -> Self {
        RiverParams {
            num_ranks: 4,
            pot: 2.0,
            stack: 8.0,
            bet_fractions: vec![vec![0.5, 1.0], vec![1.0]],
            raise_cap: 2,
            hand_weights: None,
            big_blind: Some(100.0),
        }
    }
}

#[derive(Clone)]
struct RiverState {
    rx: usize,
    ry: usize,
    to_act: Player,
    /// Chips committed this street beyond the starting pot, per player.
    extra: [Rational; 2],
    /// Bets and raises so far.
    level: usize,
    x_checked: bool,
    history: String,
}

struct RiverSpec {
    half_pot: Rational,
    stack: Rational,
    fractions: Vec<Vec<Rational>>,
    raise_cap: usize,
}

fn to_rational(v: f64, what: &str) -> Result<Rational, GameError> {
    Rational::approximate_float(v)
        .ok_or_else(|| GameError::Parameter(format!("{what} ({v}) is not representable")))
}

/// Single-street endgame: chance deals each player one rank, the first
/// player may fold, check, or bet by pot fractions, and responses follow a
/// fold/call/raise pattern limited by the raise cap. Showdown compares
/// ranks; ties split the pot.
pub fn river_endgame(params: &RiverParams) -> Result<ExtensiveFormGame, GameError> {
    if params.num_ranks < 2 {
        return Err(GameError::Parameter(format!(
            "num_ranks must be at least 2, got {}",
            params.num_ranks
        )));
    }
    if params.pot <= 0.0 {
        return Err(GameError::Parameter(format!("pot must be positive, got {}", params.pot)));
    }
    if params.stack < params.pot / 2.0 {
        return Err(GameError::Parameter(format!(
            "stack ({}) must be at least half the pot ({})",
            params.stack, params.pot
        )));
    }
    if params.bet_fractions.is_empty() || params.bet_fractions.iter().any(Vec::is_empty) {
        return Err(GameError::Parameter("bet_fractions must be non-empty per level".into()));
    }
    for level in &params.bet_fractions {
        for &f in level {
            if f <= 0.0 {
                return Err(GameError::Parameter(format!("bet fraction {f} is not positive")));
            }
        }
    }
    let spec = RiverSpec {
        half_pot: to_rational(params.pot, "pot")? / Rational::from_integer(2),
        stack: to_rational(params.stack, "stack")?,
        fractions: params
            .bet_fractions
            .iter()
            .map(|level| level.iter().map(|&f| to_rational(f, "bet fraction")).collect())
            .collect::<Result<_, _>>()?,
        raise_cap: params.raise_cap,
    };

    let r = params.num_ranks;
    let weights: Vec<Vec<Rational>> = match &params.hand_weights {
        None => vec![vec![Rational::new(1, (r * r) as i64); r]; r],
        Some(w) => {
            if w.len() != r || w.iter().any(|row| row.len() != r) {
                return Err(GameError::Parameter("hand_weights must be num_ranks x num_ranks".into()));
            }
            let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(r);
            for row in w {
                rows.push(row.iter().map(|&v| to_rational(v, "hand weight")).collect::<Result<_, _>>()?);
            }
            let total: Rational = rows.iter().flatten().copied().sum();
            if total <= Rational::from_integer(0) {
                return Err(GameError::Parameter("hand_weights must have positive mass".into()));
            }
            rows.iter().map(|row| row.iter().map(|&v| v / total).collect()).collect()
        }
    };

    let mut b = GameBuilder::new();
    let root = b.reserve();
    let mut outcomes = Vec::new();
    for rx in 0..r {
        for ry in 0..r {
            let prob = weights[rx][ry];
            if prob <= Rational::from_integer(0) {
                continue;
            }
            let deal = b.reserve();
            let state = RiverState {
                rx,
                ry,
                to_act: Player::X,
                extra: [Rational::from_integer(0); 2],
                level: 0,
                x_checked: false,
                history: String::new(),
            };
            build_river(&mut b, deal, state, &spec);
            outcomes.push(ChanceOutcome { label: format!("h{rx}v{ry}"), prob, child: deal });
        }
    }
    b.chance(root, outcomes);
    let mut game = b.finish();
    game.big_blind = params.big_blind;
    Ok(game)
}

fn river_showdown(s: &RiverState, spec: &RiverSpec) -> Rational {
    let stake = spec.half_pot + s.extra[0];
    match s.rx.cmp(&s.ry) {
        std::cmp::Ordering::Greater => stake,
        std::cmp::Ordering::Less => -stake,
        std::cmp::Ordering::Equal => Rational::from_integer(0),
    }
}

fn build_river(b: &mut GameBuilder, at: usize, s: RiverState, spec: &RiverSpec) {
    let me = if s.to_act == Player::X { 0 } else { 1 };
    let opp = 1 - me;
    let deficit = s.extra[opp] - s.extra[me];
    let zero = Rational::from_integer(0);
    let mut actions = Vec::new();

    // Folding surrenders everything committed, including the pot share.
    let fold_loss = spec.half_pot + s.extra[me];
    let fold_pay = if s.to_act == Player::X { -fold_loss } else { fold_loss };
    let fold = b.terminal(fold_pay);
    actions.push(Action { label: "fold".into(), child: fold });

    if deficit == zero {
        if s.x_checked {
            // Check behind ends the street at showdown.
            let t = b.terminal(river_showdown(&s, spec));
            actions.push(Action { label: "check".into(), child: t });
        } else {
            let child = b.reserve();
            let mut ns = s.clone();
            ns.to_act = other(s.to_act);
            ns.x_checked = true;
            ns.history.push('k');
            build_river(b, child, ns, spec);
            actions.push(Action { label: "check".into(), child });
        }
    } else {
        let mut ns = s.clone();
        ns.extra[me] += deficit;
        let t = b.terminal(river_showdown(&ns, spec));
        actions.push(Action { label: "call".into(), child: t });
    }

    if s.level < spec.raise_cap {
        let level_fracs = &spec.fractions[s.level.min(spec.fractions.len() - 1)];
        let pot_now = spec.half_pot * Rational::from_integer(2) + s.extra[0] + s.extra[1];
        let mut seen = Vec::new();
        for (fi, &frac) in level_fracs.iter().enumerate() {
            // Match the outstanding bet, then add a fraction of the
            // resulting pot, capped by the stack (an all-in).
            let raise = frac * (pot_now + deficit);
            let mut add = deficit + raise;
            if s.extra[me] + add > spec.stack {
                add = spec.stack - s.extra[me];
            }
            if add <= deficit {
                continue;
            }
            if seen.contains(&add) {
                continue;
            }
            seen.push(add);
            let child = b.reserve();
            let mut ns = s.clone();
            ns.extra[me] += add;
            ns.level += 1;
            ns.to_act = other(s.to_act);
            ns.x_checked = false;
            ns.history.push_str(&format!("b{fi}."));
            build_river(b, child, ns, spec);
            let label = if s.level == 0 { format!("bet{fi}") } else { format!("raise{fi}") };
            actions.push(Action { label, child });
        }
    }

    let own = if s.to_act == Player::X { s.rx } else { s.ry };
    let key = format!("{own}|{}", s.history);
    b.decision(at, s.to_act, key, actions);
}
