from .incident import (  # noqa: F401
    incident_features,
    incident_location_impact,
    incident_time_window,
    road_orientation,
)
from .weather import WeatherScaler, weather_features  # noqa: F401
from .timefeat import cyclic_encode, time_features  # noqa: F401
from .assemble import FeatureMatrix, assemble_features, build_feature_matrix  # noqa: F401
