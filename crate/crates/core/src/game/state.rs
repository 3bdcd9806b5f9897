use nalgebra::DMatrix;

use crate::error::Result;
use crate::oracles::RegretOracle;

/// Everything the incremental solver knows after each step.
#[derive(Debug, Clone)]
pub struct GameState<F> {
    /// Representation atoms, `d x r` each.
    pub reps: Vec<DMatrix<f64>>,
    /// Current atom weights.
    pub p: Vec<f64>,
    /// Adversarial functions gathered so far.
    pub funcs: Vec<F>,
    /// Current function weights.
    pub o: Vec<f64>,
    /// `loss[j][i]`: regret of atom `j` on function `i` with a fully fit
    /// predictor.
    pub loss: Vec<Vec<f64>>,
    /// For finite classes: the whole class and each atom's regret on it.
    pub class_funcs: Option<Vec<F>>,
    pub class_table: Option<Vec<Vec<f64>>>,
    /// `reg_k` for each completed outer iteration.
    pub reg_trace: Vec<f64>,
    /// Atom weights in force when `reg_k` was measured.
    pub weight_trace: Vec<Vec<f64>>,
}

impl<F: Clone> GameState<F> {
    pub fn new<O: RegretOracle<Func = F>>(
        oracle: &O,
        init_rep: DMatrix<f64>,
        funcs: Vec<F>,
        class_funcs: Option<Vec<F>>,
    ) -> Result<Self> {
        let row = funcs.iter().map(|f| oracle.regret(&init_rep, f)).collect::<Result<Vec<_>>>()?;
        let class_table = match &class_funcs {
            Some(all) => Some(vec![all.iter().map(|f| oracle.regret(&init_rep, f)).collect::<Result<Vec<_>>>()?]),
            None => None,
        };
        let n = funcs.len();
        Ok(Self {
            reps: vec![init_rep],
            p: vec![1.0],
            o: if n == 0 { Vec::new() } else { vec![1.0 / n as f64; n] },
            funcs,
            loss: vec![row],
            class_funcs,
            class_table,
            reg_trace: Vec::new(),
            weight_trace: Vec::new(),
        })
    }

    pub fn push_function<O: RegretOracle<Func = F>>(&mut self, oracle: &O, f: F) -> Result<()> {
        for (rep, row) in self.reps.iter().zip(self.loss.iter_mut()) {
            row.push(oracle.regret(rep, &f)?);
        }
        self.funcs.push(f);
        let n = self.funcs.len();
        // the newcomer enters with weight 1/n, the rest keep their proportions
        if self.o.is_empty() {
            self.o = vec![1.0];
        } else {
            let keep = (n - 1) as f64 / n as f64;
            self.o.iter_mut().for_each(|w| *w *= keep);
            self.o.push(1.0 / n as f64);
        }
        Ok(())
    }

    pub fn push_atom<O: RegretOracle<Func = F>>(&mut self, oracle: &O, atom: DMatrix<f64>, p: Vec<f64>, o: Vec<f64>) -> Result<()> {
        let row = self.funcs.iter().map(|f| oracle.regret(&atom, f)).collect::<Result<Vec<_>>>()?;
        if let (Some(all), Some(table)) = (&self.class_funcs, &mut self.class_table) {
            table.push(all.iter().map(|f| oracle.regret(&atom, f)).collect::<Result<Vec<_>>>()?);
        }
        self.loss.push(row);
        self.reps.push(atom);
        self.p = p;
        self.o = o;
        Ok(())
    }

    /// Loss table as a matrix, atoms by functions.
    pub fn loss_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.reps.len(), self.funcs.len(), |j, i| self.loss[j][i])
    }
}
