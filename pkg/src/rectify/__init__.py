"""Multiscale geometry of discrete measures: beta numbers, Jones sums,
net hierarchies, rectifiable-curve construction and cone classification."""

__version__ = "0.1.0"

from . import beta, cones, curve, geometry, jones, measures, nets, trees
from .beta import BetaResult, best_fit_line, beta2, beta_sup, center_of_mass
from .curve import (NetHierarchy, annotate, connectedness, construct,
                    hierarchy_from_points, length_accounting,
                    validate_hierarchy)
from .geometry import (Ball, Line, MPlane, dist_point_line, dist_point_plane,
                       hausdorff_distance, order_by_projection)
from .jones import classify, jones_profile, truncation_invariance_gap
from .measures import DiscreteMeasure, ball_mass, doubling_profile, generate
from .nets import build_family, maximal_net, overlap_counts
from .trees import build_cores, build_tree, good_bad, leaves_curve
from .cones import (ConeSpec, classify_graph_rectifiable, cone_mass_ratio,
                    eta_alpha, graph_extract)
