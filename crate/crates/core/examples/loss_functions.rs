//! Values, derivatives and boundedness constants of the supported losses.

use pconf::LossKind;

fn main() -> pconf::Result<()> {
    let margins = [-3.0, -1.0, 0.0, 1.0, 3.0];

    println!("{:<10}{}", "loss", margins.map(|z| format!("{z:>10}")).join(""));
    for kind in LossKind::TRAINABLE {
        let values: Vec<String> = margins
            .iter()
            .map(|&z| kind.value(z).map(|v| format!("{v:>10.4}")))
            .collect::<Result<_, _>>()?;
        println!("{:<10}{}", kind, values.join(""));
    }

    println!("\nderivatives");
    for kind in LossKind::TRAINABLE {
        let grads: Vec<String> = margins
            .iter()
            .map(|&z| kind.grad(z).map(|v| format!("{v:>10.4}")))
            .collect::<Result<_, _>>()?;
        println!("{:<10}{}", kind, grads.join(""));
    }

    // Bound C_l and Lipschitz constant L_l when every margin lies in [-C_g, C_g].
    println!("\nconstants for C_g = 5");
    for kind in LossKind::TRAINABLE {
        let (c, l) = kind.constants(5.0)?;
        println!("{kind:<10} C_l = {c:<10.4} L_l = {l:.4}");
    }

    // The zero-one loss is for scoring only; a tie counts as an error.
    println!("\nzero-one at 0: {}", LossKind::ZeroOne.value(0.0)?);
    Ok(())
}
