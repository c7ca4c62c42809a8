"""Discrete mixed solvers for the biharmonic equation Delta^2 u = f.

On meshes with boundary the clamped problem (u = du/dn = 0) is solved
as a coupled symmetric saddle point system in (u1, u2) with u2 = Delta
u1 in the positive semidefinite convention: u1 lives in the interior
hat space, u2 in the full hat space, and the Neumann condition is not
imposed explicitly; it is encoded by testing the second equation
against all hat functions, including the boundary ones.

On closed meshes the problem decouples into two Poisson solves with
zero-mean constraints enforced by a bordered Lagrange row.  A third
path eliminates u2 through the lumped mass matrix, leaving a single
sparse positive definite system for u1.
"""

import numpy as np
import scipy.sparse as sp

from .fem import assemble_mass, assemble_stiffness, partition_dofs
from .linalg import (SolveReport, solve_spd, solve_symmetric_indefinite,
                     NotConvergedError)


class NoBoundaryError(ValueError):
    """Dirichlet solver called on a closed mesh."""


class HasBoundaryError(ValueError):
    """Closed-surface solver called on a mesh with boundary."""


# Meshes beyond this dof count get a relaxed saddle residual floor.
_LARGE_MESH_DOFS = 100_000
_LARGE_MESH_TOL_FLOOR = 1e-9


class MixedSolution:
    """Solution pair of the discrete mixed biharmonic problem.

    Attributes
    ----------
    u1 : ndarray, shape (n,)
        Primal solution; exactly zero on boundary dofs.
    u2 : ndarray, shape (n,)
        Auxiliary variable approximating Delta u1 (positive
        semidefinite convention), unconstrained on the boundary.
    solve_report : SolveReport
        Worst-case report over the underlying linear solves.
    mass_mode : str
        "consistent" or "lumped".
    f_mean_removed : float
        M-weighted mean subtracted from f on closed surfaces (0 for
        meshes with boundary).
    """

    def __init__(self, u1, u2, solve_report, mass_mode,
                 f_mean_removed=0.0):
        self.u1 = u1
        self.u2 = u2
        self.solve_report = solve_report
        self.mass_mode = mass_mode
        self.f_mean_removed = float(f_mean_removed)


def _check_field(mesh, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (mesh.n_vertices,):
        raise ValueError(
            f"field shape {f.shape} does not match vertex count "
            f"{mesh.n_vertices}")
    if not np.all(np.isfinite(f)):
        raise ValueError("right-hand side contains non-finite entries")
    return f


def _verify_identity(lhs, rhs, tol, label):
    """Check a variational identity lhs = rhs by explicit residual."""
    scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1e-300)
    res = np.linalg.norm(lhs - rhs) / scale
    if res > tol:
        raise NotConvergedError(
            f"{label} identity violated: relative residual {res:.3e} "
            f"exceeds {tol:.1e}")
    return res


def saddle_system(mesh, f):
    """Assemble the coupled saddle matrix and right-hand side.

    With S the cotangent stiffness, M the consistent mass and B the
    interior row slice of S, the system is

        [ 0   B ] [u1]   [ M[interior, :] f ]
        [ B^T -M ] [u2] = [        0         ]

    Returns
    -------
    matrix : scipy.sparse.csr_matrix, shape (ni + n, ni + n)
    rhs : ndarray
    part : DofPartition
    """
    f = _check_field(mesh, f)
    part = partition_dofs(mesh)
    stiffness = assemble_stiffness(mesh)
    mass = assemble_mass(mesh, "consistent")
    b_block = stiffness[part.interior, :]
    matrix = sp.bmat([[None, b_block], [b_block.T, -mass]], format="csr")
    rhs = np.concatenate([mass[part.interior, :] @ f,
                          np.zeros(mesh.n_vertices)])
    return matrix, rhs, part


def solve_mixed_dirichlet(mesh, f, tol=1e-10):
    """Solve the clamped mixed biharmonic problem on a bounded mesh.

    Parameters
    ----------
    mesh : TriMesh
        Mesh with nonempty boundary.
    f : ndarray, shape (n,)
        Nodal samples of the right-hand side.
    tol : float
        Relative residual target (relaxed to 1e-9 beyond 1e5 dofs).

    Returns
    -------
    MixedSolution

    Raises
    ------
    NoBoundaryError
        On closed meshes; use :func:`solve_mixed_closed`.
    NotConvergedError
        If the factored solve misses the residual target.
    """
    if mesh.is_closed:
        raise NoBoundaryError(
            "mesh has no boundary; use solve_mixed_closed")
    if mesh.n_vertices > _LARGE_MESH_DOFS:
        tol = max(tol, _LARGE_MESH_TOL_FLOOR)
    matrix, rhs, part = saddle_system(mesh, f)
    x, report = solve_symmetric_indefinite(matrix, rhs, tol=tol)
    n = mesh.n_vertices
    u1 = np.zeros(n)
    u1[part.interior] = x[:part.n_interior]
    u2 = x[part.n_interior:]

    stiffness = assemble_stiffness(mesh)
    mass = assemble_mass(mesh, "consistent")
    b_block = stiffness[part.interior, :]
    f = np.asarray(f, dtype=float)
    _verify_identity(b_block @ u2, mass[part.interior, :] @ f, tol,
                     "first variational")
    _verify_identity(b_block.T @ x[:part.n_interior], mass @ u2, tol,
                     "second variational")
    return MixedSolution(u1, u2, report, "consistent")


def _solve_zero_mean_poisson(stiffness, border, rhs, tol):
    """Solve S u = rhs with the constraint border^T u = 0.

    The zero-mean constraint is enforced by a single Lagrange row,
    keeping the system symmetric:  [[S, border], [border^T, 0]].
    """
    n = stiffness.shape[0]
    col = sp.csr_matrix(border.reshape(n, 1))
    matrix = sp.bmat([[stiffness, col], [col.T, None]], format="csr")
    aug = np.concatenate([rhs, [0.0]])
    x, report = solve_symmetric_indefinite(matrix, aug, tol=tol)
    return x[:n], report


def solve_mixed_closed(mesh, f, tol=1e-10):
    """Solve the biharmonic problem on a closed mesh by double Poisson.

    The right-hand side is projected onto zero M-weighted mean (the
    problem quotients out constants); the removed component is recorded
    in the returned solution.  Both u1 and u2 satisfy 1^T M u = 0
    through a bordered Lagrange multiplier.

    Raises
    ------
    HasBoundaryError
        On meshes with boundary; use :func:`solve_mixed_dirichlet`.
    """
    if not mesh.is_closed:
        raise HasBoundaryError(
            "mesh has a boundary; use solve_mixed_dirichlet")
    f = _check_field(mesh, f)
    stiffness = assemble_stiffness(mesh)
    mass = assemble_mass(mesh, "consistent")
    ones = np.ones(mesh.n_vertices)
    border = mass @ ones
    total = float(border @ ones)
    mean = float(border @ f) / total
    f_tilde = f - mean

    u2, rep2 = _solve_zero_mean_poisson(stiffness, border,
                                        mass @ f_tilde, tol)
    u1, rep1 = _solve_zero_mean_poisson(stiffness, border, mass @ u2, tol)
    _verify_identity(stiffness @ u2, mass @ f_tilde, tol, "first Poisson")
    _verify_identity(stiffness @ u1, mass @ u2, tol, "second Poisson")
    worst = rep2 if rep2.relative_residual >= rep1.relative_residual else rep1
    report = SolveReport(worst.method, rep1.iterations + rep2.iterations,
                         worst.relative_residual)
    return MixedSolution(u1, u2, report, "consistent",
                         f_mean_removed=mean)


def solve_mixed_lumped_schur(mesh, f, tol=1e-10):
    """Clamped solve with u2 eliminated through the lumped mass matrix.

    Lumping makes M diagonal, so u2 = M_L^{-1} B^T u1 can be
    substituted into the first equation, leaving the sparse positive
    definite system  B M_L^{-1} B^T u1 = M[interior, :] f  (consistent
    mass on the right-hand side), solved by conjugate gradients.

    Returns
    -------
    MixedSolution
        With ``mass_mode`` set to "lumped".
    """
    if mesh.is_closed:
        raise NoBoundaryError(
            "mesh has no boundary; use solve_mixed_closed")
    f = _check_field(mesh, f)
    part = partition_dofs(mesh)
    stiffness = assemble_stiffness(mesh)
    mass = assemble_mass(mesh, "consistent")
    lumped = assemble_mass(mesh, "lumped").diagonal()
    b_block = stiffness[part.interior, :]
    inv_lumped = sp.diags(1.0 / lumped)
    schur = (b_block @ inv_lumped @ b_block.T).tocsr()
    rhs = mass[part.interior, :] @ f
    x, report = solve_spd(schur, rhs, tol=tol)
    u1 = np.zeros(mesh.n_vertices)
    u1[part.interior] = x
    u2 = (b_block.T @ x) / lumped
    _verify_identity(b_block @ u2, rhs, tol, "first variational")
    _verify_identity(b_block.T @ x, lumped * u2, tol, "second variational")
    return MixedSolution(u1, u2, report, "lumped")
