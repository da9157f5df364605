"""descentkit: sites, sheaves, fibered categories, stacks and module descent
made executable on finite data, with every embedded theorem verified at desk
scale by exhaustive checks."""

__version__ = "0.1.0"
