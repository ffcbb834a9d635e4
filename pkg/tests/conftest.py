import numpy as np
import pytest

from treefdr import build_hierarchy

# Seven-node binary tree used throughout: one root, two children, four leaves.
SEVEN_NODE_PARENTS = [0, 1, 1, 2, 2, 3, 3]

# Worked p-values for that tree.
SEVEN_NODE_PVALUES = {1: 0.01, 2: 0.75, 3: 0.008, 4: 0.6, 5: 0.85, 6: 0.03, 7: 0.05}


@pytest.fixture
def seven_tree():
    return build_hierarchy(SEVEN_NODE_PARENTS)


@pytest.fixture
def seven_pvalues():
    return dict(SEVEN_NODE_PVALUES)


@pytest.fixture
def seven_pvalue_array():
    return np.array([SEVEN_NODE_PVALUES[i] for i in range(1, 8)])
