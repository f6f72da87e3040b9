from .assets import (DEFAULT_MATERIALS, PAPER_PARTICLE_COUNTS, SOFT_KINDS, Asset, AssetStore,
                     builtin_assets, estimate_volume, procedural_points)
from .kinematics import (angular_velocity_to_euler_rates, axis_angle_to_rotation, center_of_mass,
                         derive_lame, euler_rate_matrix, euler_to_rotation, polar_rotation,
                         project_to_so3, rotation_angle, rotation_to_euler, wrap_angle)
from .scene import farthest_point_sampling, instantiate_scene, place_asset, sample_keypoints
from .types import (SPLIT_TAGS, Domain, MaterialParams, ObjectSpec, ObjectState, ParticleSystem,
                    SceneConfig, Trajectory)
from .sampling import place_objects, scene_pool
