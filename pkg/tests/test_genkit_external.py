import numpy as np
import pytest

from latentswipe.errors import ExternalUnavailable
from latentswipe.genkit import ProceduralGenerator
from latentswipe.genkit.external import ExternalGenerator
from latentswipe.genkit.server import GeneratorHost


@pytest.fixture(scope="module")
def hosted():
    local = ProceduralGenerator(dim=16, size=64)
    host = GeneratorHost(local, port=0).start()
    client = ExternalGenerator(host.url, timeout=5.0)
    yield local, client
    host.close()


class TestWireProtocol:
    def test_descriptor_round_trip(self, hosted):
        local, client = hosted
        d = client.descriptor()
        assert (d.dim, d.height, d.width) == (16, 64, 64)

    def test_rendered_pixels_identical_over_the_wire(self, hosted):
        local, client = hosted
        w = local.sample_latents(1, seed=5)[0]
        np.testing.assert_array_equal(client.render(w).pixels, local.render(w).pixels)

    def test_latent_embedding_matches_local(self, hosted):
        local, client = hosted
        w = local.sample_latents(1, seed=6)[0]
        np.testing.assert_allclose(client.embed(w), local.embed(w), atol=1e-12)

    def test_image_embedding_resolves_through_render_registry(self, hosted):
        local, client = hosted
        w = local.sample_latents(1, seed=7)[0]
        image = client.render(w)
        assert image.face_params is None  # wire images carry no provenance
        np.testing.assert_allclose(client.embed(image), local.embed(w), atol=1e-12)

    def test_unknown_image_rejected(self, hosted):
        _, client = hosted
        from latentswipe.genkit import ImageBuffer

        stray = ImageBuffer(pixels=np.full((64, 64, 3), 7, dtype=np.uint8))
        with pytest.raises(ExternalUnavailable):
            client.embed(stray)

    def test_wrong_latent_length_rejected_by_host(self, hosted):
        _, client = hosted
        import requests

        resp = requests.post(
            f"{client.base_url}/v1/render", json={"latent": [0.0] * 3}, timeout=5
        )
        assert resp.status_code == 422

    def test_unreachable_host_raises_unavailable(self):
        client = ExternalGenerator("http://127.0.0.1:9", timeout=0.5)
        with pytest.raises(ExternalUnavailable):
            client.descriptor()
