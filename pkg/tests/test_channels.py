import numpy as np
import pytest

from entdyn.channels import (
    PauliChannel,
    UnitalChannel,
    apply,
    apply_one_sided,
    apply_two_sided,
    bloch_affine_map,
    channel_for,
    channel_from_json,
    channel_to_json,
    chi_from_radii,
    compose,
    decompose_unital,
    dephasing_channel,
    hwp_angle_to_p,
    is_completely_positive,
    isotropic_channel,
    kraus_operators,
    noise_probability,
    pauli_channel_from_radii,
    process_matrix,
    radii_from_chi,
    rotation_from_su2,
    su2_from_rotation,
    two_field_channel,
)
from entdyn.dynamics import concurrence
from entdyn.sampling import (
    random_cp_radii,
    random_density_matrix,
    random_pauli_channel,
    random_pure_ket,
    random_unital_channel,
    random_unitary,
)
from entdyn.states import PAULIS, bell_state, bloch_vector, dm, KET_H, partial_trace


def kraus_sum_oracle(chi, rho, lift=None):
    """Literal double sum chi_mn E_m rho E_n^dag, optionally lifted to one qubit."""
    out = np.zeros_like(rho, dtype=complex)
    eye = np.eye(2, dtype=complex)
    for m in range(4):
        for n in range(4):
            if chi[m, n] == 0.0:
                continue
            em, en = PAULIS[m], PAULIS[n]
            if lift == 0:
                em, en = np.kron(em, eye), np.kron(en, eye)
            elif lift == 1:
                em, en = np.kron(eye, em), np.kron(eye, en)
            out += chi[m, n] * (em @ rho @ en.conj().T)
    return out


def amplitude_damping_chi(gamma):
    """Process matrix of a non-unital (but trace-preserving) channel, for the
    unitality error paths."""
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    chi = np.zeros((4, 4), dtype=complex)
    for k in (k0, k1):
        coeffs = np.array([np.trace(PAULIS[m] @ k) / 2.0 for m in range(4)])
        chi += np.outer(coeffs, coeffs.conj())
    return chi


class TestApply:
    def test_identity_channel(self):
        rng = np.random.default_rng(20)
        identity = PauliChannel([1, 0, 0, 0])
        rho = random_density_matrix(rng, 2)
        assert np.allclose(apply(identity, rho), rho, atol=1e-15)

    def test_isotropic_three_quarters_fully_depolarizes(self):
        out = apply(isotropic_channel(0.75), dm(KET_H))
        assert np.allclose(out, np.eye(2) / 2, atol=1e-15)

    def test_two_field_shrinks_z(self):
        for p in (0.0, 0.3, 0.8, 1.0):
            out = apply(two_field_channel(p), dm(KET_H))
            assert np.allclose(bloch_vector(out), (0, 0, 1 - 2 * p), atol=1e-12)

    def test_matches_kraus_sum_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            pc = random_pauli_channel(rng)
            rho = random_density_matrix(rng, 2)
            assert np.allclose(
                apply(pc, rho), kraus_sum_oracle(np.diag(pc.chi_diag), rho), atol=1e-13
            )

    def test_process_matrix_apply_matches_oracle(self):
        rng = np.random.default_rng(22)
        chi = process_matrix(amplitude_damping_chi(0.3))
        rho = random_density_matrix(rng, 2)
        assert np.allclose(apply(chi, rho), kraus_sum_oracle(np.asarray(chi), rho), atol=1e-13)

    def test_unitality_and_trace(self):
        rng = np.random.default_rng(23)
        mixed = np.eye(2, dtype=complex) / 2
        channels = [
            two_field_channel(0.4),
            isotropic_channel(0.7),
            dephasing_channel(0.2),
            random_pauli_channel(rng),
            random_unital_channel(rng),
        ]
        for ch in channels:
            assert np.allclose(apply(ch, mixed), mixed, atol=1e-12)
            rho = random_density_matrix(rng, 2)
            assert np.trace(apply(ch, rho)).real == pytest.approx(1.0, abs=1e-12)


class TestOneTwoSided:
    def test_identity_fixes_bell(self):
        bell = bell_state("phi+")
        out = apply_one_sided(PauliChannel([1, 0, 0, 0]), bell, target=1)
        assert np.allclose(out, bell, atol=1e-15)

    def test_isotropic_concurrence_law(self):
        bell = bell_state("phi+")
        for p in (0.1, 0.3, 0.5, 0.8):
            out = apply_one_sided(isotropic_channel(p), bell, target=1)
            assert concurrence(out).c == pytest.approx(max(1 - 2 * p, 0.0), abs=1e-12)

    def test_matches_lifted_kraus_oracle(self):
        rng = np.random.default_rng(24)
        for _ in range(10):
            pc = random_pauli_channel(rng)
            psi = random_pure_ket(rng, 4)
            rho = np.outer(psi, psi.conj())
            for target in (0, 1):
                assert np.allclose(
                    apply_one_sided(pc, rho, target=target),
                    kraus_sum_oracle(np.diag(pc.chi_diag), rho, lift=target),
                    atol=1e-13,
                )

    def test_untouched_marginal_preserved(self):
        rng = np.random.default_rng(25)
        rho = random_density_matrix(rng, 4)
        out = apply_one_sided(random_pauli_channel(rng), rho, target=1)
        assert np.allclose(partial_trace(out, 0), partial_trace(rho, 0), atol=1e-12)

    def test_two_sided_equals_sequential(self):
        rng = np.random.default_rng(26)
        for _ in range(10):
            ch = random_pauli_channel(rng)
            rho = random_density_matrix(rng, 4)
            seq = apply_one_sided(ch, apply_one_sided(ch, rho, target=0), target=1)
            assert np.allclose(apply_two_sided(ch, rho), seq, atol=1e-12)

    def test_two_field_breaking_point(self):
        out = apply_two_sided(two_field_channel(1.0 / 3.0), bell_state("phi+"))
        assert concurrence(out).c == pytest.approx(0.0, abs=1e-12)

    def test_bad_target(self):
        with pytest.raises(ValueError):
            apply_one_sided(two_field_channel(0.1), bell_state("phi+"), target=2)


class TestRadii:
    def test_identity_radii(self):
        assert np.allclose(radii_from_chi(PauliChannel([1, 0, 0, 0])), (1, 1, 1))

    def test_two_field_radii(self):
        for p in (0.0, 0.25, 0.6, 1.0):
            r = radii_from_chi(two_field_channel(p))
            assert np.allclose(r, (1 - p, 1 - p, 1 - 2 * p), atol=1e-14)

    def test_isotropic_radii(self):
        for p in (0.0, 0.3, 0.9):
            r = radii_from_chi(isotropic_channel(p))
            assert np.allclose(r, np.full(3, 1 - 4 * p / 3), atol=1e-14)

    def test_dephasing_radii(self):
        r = radii_from_chi(dephasing_channel(0.5))
        assert np.allclose(r, (0, 0, 1), atol=1e-14)

    def test_chi_from_radii_trivials(self):
        assert np.allclose(chi_from_radii((1, 1, 1)), (1, 0, 0, 0))
        assert np.allclose(chi_from_radii((0, 0, 0)), (0.25, 0.25, 0.25, 0.25))

    def test_round_trip(self):
        rng = np.random.default_rng(27)
        for _ in range(100):
            r = random_cp_radii(rng)
            assert np.max(np.abs(radii_from_chi(pauli_channel_from_radii(r)) - r)) < 1e-14
            ch = random_pauli_channel(rng)
            assert np.max(np.abs(chi_from_radii(radii_from_chi(ch)) - ch.chi_diag)) < 1e-14

    def test_non_cp_radii_rejected_with_diagnostic(self):
        with pytest.raises(ValueError, match="chi_"):
            pauli_channel_from_radii((1.0, 1.0, -1.0))


class TestCompletePositivity:
    def test_identity_is_cp(self):
        assert is_completely_positive((1, 1, 1))

    def test_inverted_corner_is_not(self):
        # |R1 + R2| = 2 > |1 + R3| = 0
        assert not is_completely_positive((1, 1, -1))

    def test_agrees_with_chi_oracle(self):
        rng = np.random.default_rng(28)
        samples = rng.uniform(-1, 1, size=(2000, 3))
        for r in samples:
            assert is_completely_positive(r) == (chi_from_radii(r).min() >= -1e-12)


class TestFamilies:
    def test_noise_probability(self):
        assert noise_probability(PauliChannel([1, 0, 0, 0])) == 0.0
        assert noise_probability(two_field_channel(0.3)) == pytest.approx(0.3)
        assert noise_probability(PauliChannel([0.25] * 4)) == pytest.approx(0.75)

    def test_two_field_values(self):
        assert np.allclose(two_field_channel(0.0).chi_diag, (1, 0, 0, 0))
        assert np.allclose(radii_from_chi(two_field_channel(0.5)), (0.5, 0.5, 0.0))
        assert np.allclose(two_field_channel(1.0).chi_diag, (0, 0.5, 0.5, 0))

    def test_isotropic_values(self):
        assert np.allclose(isotropic_channel(0.0).chi_diag, (1, 0, 0, 0))
        p_star = (3 - np.sqrt(3)) / 4
        assert np.allclose(
            radii_from_chi(isotropic_channel(p_star)), np.full(3, np.sqrt(1 / 3)), atol=1e-14
        )
        assert np.allclose(radii_from_chi(isotropic_channel(0.75)), (0, 0, 0), atol=1e-14)

    def test_dephasing_values(self):
        assert np.allclose(dephasing_channel(0.0).chi_diag, (1, 0, 0, 0))
        assert np.allclose(radii_from_chi(dephasing_channel(0.5)), (0, 0, 1), atol=1e-14)

    def test_out_of_range_rejected(self):
        for factory in (two_field_channel, isotropic_channel, dephasing_channel):
            with pytest.raises(ValueError):
                factory(-0.1)
            with pytest.raises(ValueError):
                factory(1.1)

    def test_hwp_angle(self):
        assert hwp_angle_to_p(0.0) == pytest.approx(0.0)
        assert hwp_angle_to_p(np.pi / 4) == pytest.approx(1.0)
        assert hwp_angle_to_p(np.pi / 8) == pytest.approx(0.5)

    def test_channel_for_unknown_family(self):
        with pytest.raises(ValueError):
            channel_for("amplitude-damping", 0.1)


class TestCompose:
    def test_identity_neutral(self):
        x_flip = PauliChannel([0, 1, 0, 0])
        out = compose(PauliChannel([1, 0, 0, 0]), x_flip)
        assert np.allclose(out.chi_diag, x_flip.chi_diag)

    def test_dephasing_radii_multiply(self):
        p, q = 0.2, 0.35
        out = compose(dephasing_channel(p), dephasing_channel(q))
        expected = ((1 - 2 * p) * (1 - 2 * q),) * 2 + (1.0,)
        assert np.allclose(radii_from_chi(out), expected, atol=1e-14)

    def test_application_oracle(self):
        rng = np.random.default_rng(29)
        a, b = random_pauli_channel(rng), random_pauli_channel(rng)
        composed = compose(a, b)
        for _ in range(100):
            rho = random_density_matrix(rng, 2)
            assert np.allclose(apply(composed, rho), apply(b, apply(a, rho)), atol=1e-12)

    def test_associativity_at_application_level(self):
        rng = np.random.default_rng(30)
        a, b, c = (random_pauli_channel(rng) for _ in range(3))
        left = compose(compose(a, b), c)
        right = compose(a, compose(b, c))
        for _ in range(20):
            rho = random_density_matrix(rng, 2)
            assert np.allclose(apply(left, rho), apply(right, rho), atol=1e-12)

    def test_rotated_channels_compose_through_bloch_maps(self):
        rng = np.random.default_rng(31)
        a = random_unital_channel(rng)
        b = random_unital_channel(rng)
        composed = compose(a, b)
        for _ in range(20):
            rho = random_density_matrix(rng, 2)
            assert np.allclose(apply(composed, rho), apply(b, apply(a, rho)), atol=1e-10)


class TestBlochAffineMap:
    def test_identity(self):
        assert np.allclose(bloch_affine_map(PauliChannel([1, 0, 0, 0])), np.eye(3))

    def test_two_field_diagonal(self):
        p = 0.3
        m = bloch_affine_map(two_field_channel(p))
        assert np.allclose(m, np.diag([1 - p, 1 - p, 1 - 2 * p]), atol=1e-14)

    def test_reproduces_apply_on_cardinal_states(self):
        rng = np.random.default_rng(32)
        ch = random_unital_channel(rng)
        m = bloch_affine_map(ch)
        from entdyn.states import density_from_bloch

        for axis in np.vstack([np.eye(3), -np.eye(3)]):
            direct = bloch_vector(apply(ch, density_from_bloch(axis)))
            assert np.allclose(m @ axis, direct, atol=1e-10)

    def test_non_unital_rejected(self):
        chi = process_matrix(amplitude_damping_chi(0.4))
        with pytest.raises(ValueError, match="unital"):
            bloch_affine_map(chi)


class TestDecomposeUnital:
    def test_already_diagonal(self):
        ch = decompose_unital(np.diag([0.5, 0.5, 0.2]))
        assert np.allclose(np.sort(np.abs(ch.radii))[::-1], (0.5, 0.5, 0.2))
        assert np.allclose(bloch_affine_map(ch), np.diag([0.5, 0.5, 0.2]), atol=1e-12)

    def test_rotated_diagonal_recovered(self):
        theta = np.pi / 2
        rot_z = np.array(
            [[np.cos(theta), -np.sin(theta), 0], [np.sin(theta), np.cos(theta), 0], [0, 0, 1]]
        )
        m = rot_z @ np.diag([0.6, 0.4, 0.1])
        ch = decompose_unital(m)
        assert np.allclose(bloch_affine_map(ch), m, atol=1e-10)

    def test_random_cp_maps_recompose(self):
        rng = np.random.default_rng(33)
        for _ in range(50):
            r = random_cp_radii(rng)
            m = (
                rotation_from_su2(random_unitary(rng))
                @ np.diag(r)
                @ rotation_from_su2(random_unitary(rng))
            )
            ch = decompose_unital(m)
            assert np.max(np.abs(bloch_affine_map(ch) - m)) < 1e-10

    def test_canonical_form(self):
        rng = np.random.default_rng(34)
        for _ in range(50):
            ch = decompose_unital(bloch_affine_map(random_unital_channel(rng)))
            mags = np.abs(ch.radii)
            assert mags[0] >= mags[1] >= mags[2] - 1e-12
            assert np.sum(ch.radii < 0) <= 1

    def test_non_cp_map_reports_inequality(self):
        with pytest.raises(ValueError, match=r"\|R"):
            decompose_unital(np.diag([1.0, 1.0, -1.0]))


class TestRotationConversions:
    def test_round_trip(self):
        rng = np.random.default_rng(35)
        for _ in range(50):
            u = random_unitary(rng)
            o = rotation_from_su2(u)
            assert np.allclose(o @ o.T, np.eye(3), atol=1e-12)
            assert np.linalg.det(o) == pytest.approx(1.0, abs=1e-12)
            assert np.max(np.abs(rotation_from_su2(su2_from_rotation(o)) - o)) < 1e-12

    def test_identity_and_half_turns(self):
        assert np.allclose(rotation_from_su2(su2_from_rotation(np.eye(3))), np.eye(3), atol=1e-12)
        for axis in range(3):
            o = -np.eye(3)
            o[axis, axis] = 1.0  # pi rotation about this axis
            assert np.max(np.abs(rotation_from_su2(su2_from_rotation(o)) - o)) < 1e-12

    def test_improper_rotation_rejected(self):
        with pytest.raises(ValueError):
            su2_from_rotation(np.diag([1.0, 1.0, -1.0]))


class TestValidationAndSerialization:
    def test_pauli_channel_invariants(self):
        with pytest.raises(ValueError, match="non-negative"):
            PauliChannel([1.1, -0.1, 0, 0])
        with pytest.raises(ValueError, match="sum"):
            PauliChannel([0.5, 0.2, 0.1, 0.1])

    def test_unital_channel_invariants(self):
        with pytest.raises(ValueError, match="unitary"):
            UnitalChannel(np.eye(2) * 2, np.eye(2), (1, 1, 1))
        with pytest.raises(ValueError, match="completely positive"):
            UnitalChannel(np.eye(2), np.eye(2), (1, 1, -1))

    def test_process_matrix_invariants(self):
        with pytest.raises(ValueError, match="PSD"):
            process_matrix(np.diag([1.5, -0.5, 0, 0]).astype(complex))
        chi = process_matrix(np.diag([0.7, 0.1, 0.1, 0.1]).astype(complex))
        assert chi.shape == (4, 4)

    def test_named_family_round_trip(self):
        obj = channel_to_json(isotropic_channel(0.3))
        assert obj == {"family": "isotropic", "p": 0.3}
        back = channel_from_json(obj)
        assert np.allclose(back.chi_diag, isotropic_channel(0.3).chi_diag)

    def test_pauli_round_trip(self):
        rng = np.random.default_rng(36)
        pc = random_pauli_channel(rng)
        back = channel_from_json(channel_to_json(pc))
        assert np.allclose(back.chi_diag, pc.chi_diag, atol=1e-15)

    def test_unital_round_trip(self):
        rng = np.random.default_rng(37)
        ch = random_unital_channel(rng)
        back = channel_from_json(channel_to_json(ch))
        assert np.allclose(bloch_affine_map(back), bloch_affine_map(ch), atol=1e-12)

    def test_exactly_one_parameterization(self):
        with pytest.raises(ValueError, match="exactly"):
            channel_from_json({"family": "isotropic", "p": 0.2, "chi": [1, 0, 0, 0]})
        with pytest.raises(ValueError, match="exactly"):
            channel_from_json({"family": "pauli", "p": 0.2})
        with pytest.raises(ValueError, match="unknown"):
            channel_from_json({"family": "squeezing", "p": 0.2})

    def test_kraus_operators_complete(self):
        rng = np.random.default_rng(38)
        for ch in (random_pauli_channel(rng), random_unital_channel(rng)):
            total = sum(k.conj().T @ k for k in kraus_operators(ch))
            assert np.allclose(total, np.eye(2), atol=1e-12)
