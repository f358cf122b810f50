use ddr_plate::assembly::{apply_bc_and_solve, assemble_energy_norm, relative_error};
use ddr_plate::mesh::MeshFamily;
use ddr_plate::{Discretisation, ExactSolution, Material};

fn main() -> ddr_plate::Result<()> {
    let mat = Material::standard(1e-3)?;
    let exact = ExactSolution::polynomial(mat);
    let disc = Discretisation::new(MeshFamily::Hexagonal.mesh(2)?, 1, 0)?;
    let interp = disc.interpolate_pair(&|x| exact.theta(x), &|x| exact.u(x))?;
    let sol = apply_bc_and_solve(&disc, &mat, &|x| exact.f(x), None)?;
    let err = relative_error(&assemble_energy_norm(&disc, &mat), &sol.x, &interp)?;
    println!("relative energy error {err:.4e}");
    Ok(())
}
