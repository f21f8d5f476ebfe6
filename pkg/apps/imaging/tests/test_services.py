import numpy as np
import pytest
import yaml

from apps.imaging.models import DepthMap, Image
from apps.imaging.services import (
    load_depth,
    load_image,
    load_stack_manifest,
    quantize,
    read_yaml,
    save_depth,
    save_image,
    save_stack_manifest,
)
from core.utils.exception_handler import (
    InvalidRasterError,
    ManifestError,
    OutputError,
)


class TestRasterIO:
    """Test image load/save"""

    def test_eight_bit_rgb_round_trip(self, tmp_path):
        """Test 8-bit levels survive a PNG round trip exactly"""
        levels = np.random.default_rng(0).integers(0, 256, (5, 7, 3))
        img = Image(levels / 255.0)
        path = tmp_path / "rgb.png"

        save_image(img, path)
        loaded = load_image(path)

        np.testing.assert_array_equal(loaded.data, img.data)

    def test_sixteen_bit_round_trip(self, tmp_path, quantized_gray):
        """Test 16-bit single-channel PNG keeps every level"""
        path = tmp_path / "gray16.png"

        save_image(quantized_gray, path, bit_depth=16)
        loaded = load_image(path)

        np.testing.assert_array_equal(loaded.data, quantized_gray.data)

    def test_sixteen_bit_requires_one_channel(self, tmp_path, image):
        """Test 16-bit RGB output is refused"""
        with pytest.raises(InvalidRasterError):
            save_image(image, tmp_path / "rgb16.png", bit_depth=16)

    def test_quantize_clamps_and_rounds_half_up(self):
        """Test out-of-range values clamp and 0.5 levels round up"""
        values = np.array([-0.2, 0.5 / 255.0, 1.7])

        assert quantize(values).tolist() == [0, 1, 255]

    def test_missing_file(self, tmp_path):
        """Test a missing raster raises InvalidRasterError"""
        with pytest.raises(InvalidRasterError, match="missing file"):
            load_image(tmp_path / "nope.png")

    def test_corrupt_file(self, tmp_path):
        """Test unreadable bytes raise InvalidRasterError"""
        path = tmp_path / "broken.png"
        path.write_bytes(b"definitely not a png")

        with pytest.raises(InvalidRasterError):
            load_image(path)

    def test_unwritable_destination(self, tmp_path, image):
        """Test writing into a missing directory raises OutputError"""
        with pytest.raises(OutputError):
            save_image(image, tmp_path / "missing" / "out.png")


class TestDepthIO:
    """Test .dpt depth files"""

    def test_double_precision_round_trip_is_bit_exact(self, tmp_path, depth):
        """Test f8 samples come back unchanged"""
        path = tmp_path / "depth.dpt"

        save_depth(depth, path)

        np.testing.assert_array_equal(load_depth(path).data, depth.data)

    def test_single_precision_round_trip(self, tmp_path, depth):
        """Test f4 samples come back to float32 precision"""
        path = tmp_path / "depth.dpt"

        save_depth(depth, path, sample_type="f4")

        np.testing.assert_allclose(load_depth(path).data, depth.data, rtol=1e-6)

    def test_truncated_payload(self, tmp_path, depth):
        """Test a short payload is reported as corrupt"""
        path = tmp_path / "depth.dpt"
        save_depth(depth, path)
        path.write_bytes(path.read_bytes()[:-8])

        with pytest.raises(InvalidRasterError, match="corrupt"):
            load_depth(path)

    def test_header_records_shape(self, tmp_path):
        """Test the ASCII header line"""
        path = tmp_path / "depth.dpt"

        save_depth(DepthMap(np.ones((2, 3))), path)

        assert path.read_bytes().startswith(b"DPT1 2 3 1.0 f8\n")


class TestStackManifest:
    """Test save_stack_manifest/load_stack_manifest"""

    def test_round_trip(self, tmp_path, stack):
        """Test a saved stack loads back with the same metadata"""
        manifest = save_stack_manifest(stack, tmp_path / "stack", bit_depth=16)
        loaded = load_stack_manifest(manifest)

        assert loaded.focus_distances == stack.focus_distances
        assert loaded.camera.as_dict() == stack.camera.as_dict()
        assert loaded.max_depth_m == 10.0
        assert loaded.loss_overrides == {"lambda_sharp": 0.5}
        np.testing.assert_array_equal(loaded.ground_truth_depth.data, stack.ground_truth_depth.data)
        for original, restored in zip(stack.slices, loaded.slices):
            np.testing.assert_allclose(restored.image.data, original.image.data, atol=0.5 / 65535.0 + 1e-15)

    def test_paths_resolve_relative_to_manifest(self, tmp_path, stack):
        """Test the manifest stores relative file names"""
        manifest = save_stack_manifest(stack, tmp_path)
        content = yaml.safe_load(manifest.read_text())

        assert content["all_in_focus"] == "all_in_focus.png"
        assert [entry["path"] for entry in content["slices"]] == ["slice_00.png", "slice_01.png"]

    def test_missing_manifest(self, tmp_path):
        """Test a missing manifest raises ManifestError"""
        with pytest.raises(ManifestError):
            read_yaml(tmp_path / "absent.yaml")

    def test_manifest_must_be_a_mapping(self, tmp_path):
        """Test a YAML list is rejected"""
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")

        with pytest.raises(ManifestError):
            read_yaml(path)
