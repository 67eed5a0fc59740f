"""Tour of the mesh and the discrete differential complex.

Builds structured box meshes, inspects the incidence structure, and
checks the two identities everything else in the library rests on: the
composite of the two difference operators vanishes, and canonical
interpolation commutes with differentiation.
"""
import numpy as np

from vvpflow import DeRhamComplex, build_box_mesh, interpolate


def header(text):
    print()
    print(text)
    print("-" * len(text))


def main():
    header("structured box meshes")
    for n in (1, 2, 3, 4):
        mesh = build_box_mesh(n, n, n)
        print(
            f"n={n}: {mesh.n_vertices:4d} vertices, {mesh.n_edges:4d} edges, "
            f"{mesh.n_faces:4d} faces, {mesh.n_tets:4d} tets, "
            f"h = {np.sqrt(3) / n:.4f}"
        )

    header("the composite difference operator vanishes")
    for n in (2, 3):
        complex_ = DeRhamComplex(build_box_mesh(n, n, n))
        product = complex_.d2 @ complex_.d1
        print(
            f"n={n}: D2 D1 is {product.shape[0]}x{product.shape[1]} with "
            f"max |entry| = {abs(product).max()}"
        )

    header("interpolation commutes with the curl")
    # u = curl of a quadratic potential, so curl u is computable by hand.
    def potential_curl(points, t=0.0):
        x, y, z = points.T
        return np.column_stack((y * z, x * x * z, x + y * y * z))

    def curl_of_it(points, t=0.0):
        x, y, z = points.T
        return np.column_stack((2 * y * z - x * x, y - 1.0, 2 * x * z - z))

    for n in (2, 3):
        complex_ = DeRhamComplex(build_box_mesh(n, n, n))
        circ = interpolate(potential_curl, complex_.V1)
        flux = interpolate(curl_of_it, complex_.V2)
        gap = np.abs(complex_.d1 @ circ.values - flux.values).max()
        print(f"n={n}: max |D1 (interpolated circulations) - fluxes| = {gap:.2e}")

    header("interpolation error decreases at first order")
    def smooth(points, t=0.0):
        x, y, z = points.T
        return np.column_stack((np.sin(y), np.sin(z), np.cos(x)))

    previous = None
    for n in (2, 4, 8):
        complex_ = DeRhamComplex(build_box_mesh(n, n, n))
        coeffs = interpolate(smooth, complex_.V2)
        err = complex_.error_norms(coeffs, smooth)
        ratio = "" if previous is None else f"  (ratio {previous / err.l2:.2f})"
        print(f"n={n}: flux interpolation L2 error = {err.l2:.4e}{ratio}")
        previous = err.l2


if __name__ == "__main__":
    main()
