//! Closed-form and Monte Carlo analytics for the two schemas.

mod cost;
mod expansion;

pub use cost::{
    cost_of_profile, ds3_challenge_profile, ds3_letter_profile, lemma1_combo_count, second_pass_min_cost,
    stml_challenge_profile, stml_letter_profile, two_pass_budget, BudgetReport, CostProfile, OpCosts, OpKind,
    SecondPassCost, CHALLENGE_BUDGET_SECONDS, LETTER_BUDGET_SECONDS,
};
pub use expansion::{
    central_binomial_form, expansion_csv, expansion_factor_exact, expansion_factor_mc, k_upper_bound, ExpansionEstimate, ExpansionExact,
};
