"""Free-space radar place recognition, heading estimation and pose-graph SLAM."""
from ._accel import BACKEND
from .descriptor import DescriptorConfig, a_referee, confusion_duality, r_referee
from .features import FeatureConfig, FeatureImage, count_free_space, extract_features
from .scan_io import DescriptorRecord, RadarScan, Session, load_descriptors, load_session, save_descriptors
from .se2 import Pose2, relative_pose

__version__ = "0.1.0"
