"""Upper-bound linear programs and the solvers behind them."""
