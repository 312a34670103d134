import pytest

from gtlab.render.scene import Material, Scene, Sphere


@pytest.fixture
def unit_sphere_scene() -> Scene:
    """Single unit sphere at (0, 0, -3), matte gray, black environment."""
    return Scene(
        primitives=(Sphere(center=(0.0, 0.0, -3.0), radius=1.0, material=0),),
        materials=(Material(albedo=(0.5, 0.5, 0.5)),),
        environment_radiance=(0.0, 0.0, 0.0),
    )
