"""Tests for the JSON wire format."""

import json

import pytest

from cs_certify.data.standard import arithmetic_progression, gc, six_forms
from cs_certify.diagrams.constructions import diagram_of
from cs_certify.entailment.replay import replay
from cs_certify.errors import CertificateError, DatumError
from cs_certify.export.codec import (
    decode_certificate,
    decode_datum,
    decode_diagram,
    diagram_key,
    encode_certificate,
    encode_datum,
    encode_diagram,
    encode_report,
    load_certificate,
    load_datum,
    read_json,
    write_json,
)
from cs_certify.export.models import CertificateModel, DatumModel
from cs_certify.theorems.main import prove_main


@pytest.fixture
def full_certificate(two_step_builder, square_morphism):
    """CS, morphism, relabel and weaken steps in one certificate."""
    two_step_builder.morph(square_morphism)
    two_step_builder.relabel({"": "", "00": "corner"})
    two_step_builder.weaken(["corner", "11"], k=1)
    return two_step_builder.certificate()


class TestDiagrams:
    def test_datum(self, gw_system):
        assert decode_datum(encode_datum(gw_system)) == gw_system

    def test_joined_diagram(self, two_step_builder):
        diagram = two_step_builder.current
        assert decode_diagram(encode_diagram(diagram)) == diagram

    def test_key_is_stable(self, ap3):
        assert diagram_key(diagram_of(ap3)) == diagram_key(diagram_of(arithmetic_progression(5)))
        assert diagram_key(diagram_of(ap3)) != diagram_key(diagram_of(gc(5, 1)))


class TestCertificates:
    def test_every_step_kind_survives(self, full_certificate):
        model = encode_certificate(full_certificate)
        assert [s.type for s in model.steps] == ["cs", "cs", "morph", "relabel", "weaken"]
        back = decode_certificate(model)
        assert back.claimed_gamma == full_certificate.claimed_gamma
        assert back.final == full_certificate.final
        report = replay(back)
        assert report.ok
        assert report.k == 3

    def test_diagrams_stored_once(self, two_step_certificate):
        model = encode_certificate(two_step_certificate)
        assert len(model.diagrams) == 2

    def test_tampered_diagram(self, two_step_certificate):
        model = encode_certificate(two_step_certificate)
        model.diagrams["forged"] = model.diagrams.pop(model.initial)
        model.initial = "forged"
        with pytest.raises(CertificateError):
            decode_certificate(model)

    def test_missing_initial(self, two_step_certificate):
        model = encode_certificate(two_step_certificate)
        model.initial = "nowhere"
        with pytest.raises(CertificateError):
            decode_certificate(model)

    def test_file_round_trip(self, tmp_path, full_certificate):
        path = write_json(encode_certificate(full_certificate), tmp_path / "sub" / "cert.json")
        assert path.exists()
        assert replay(load_certificate(path)).ok
        assert read_json(CertificateModel, path).claimed_k == full_certificate.claimed_k


class TestReports:
    def test_certificate_inside_report(self, tmp_path):
        report = prove_main(arithmetic_progression(7, 4), "1")
        path = write_json(encode_report(report), tmp_path / "report.json")
        cert = load_certificate(path)
        assert cert.final == diagram_of(gc(7, 2))
        assert replay(cert).ok

    def test_report_without_certificate(self, tmp_path):
        report = prove_main(arithmetic_progression(7, 4), "1")
        path = write_json(encode_report(report, with_certificate=False), tmp_path / "r.json")
        with pytest.raises(CertificateError):
            load_certificate(path)


class TestLoadDatum:
    def test_forms_file(self, tmp_path):
        path = tmp_path / "forms.json"
        path.write_text(json.dumps({"p": 7, "forms": [[1, 0, 0], [1, 0, 1], [1, 1, 0]]}))
        phi, declared = load_datum(path)
        assert len(phi) == 3
        assert declared == {"1": [1, 0, 0], "2": [1, 0, 1], "3": [1, 1, 0]}

    def test_forms_with_labels_and_modulus(self, tmp_path):
        path = tmp_path / "forms.json"
        path.write_text(json.dumps({"forms": [[1, 0], [1, 1]], "labels": ["x", "x+h"]}))
        phi, declared = load_datum(path, p=5)
        assert phi.p == 5
        assert set(declared) == {"x", "x+h"}

    def test_forms_need_modulus(self, tmp_path):
        path = tmp_path / "forms.json"
        path.write_text(json.dumps({"forms": [[1, 0]]}))
        with pytest.raises(DatumError):
            load_datum(path)

    def test_datum_file(self, tmp_path):
        path = write_json(encode_datum(six_forms(7)), tmp_path / "datum.json")
        phi, declared = load_datum(path)
        assert phi == six_forms(7)
        assert declared is None

    def test_invalid_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"p": 7, "indices": "nope"}))
        with pytest.raises(DatumError):
            load_datum(path)
        with pytest.raises(DatumError):
            read_json(DatumModel, path)
