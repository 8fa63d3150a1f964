use crate::distance::{pairwise_matrix, DistanceMatrix};
use crate::metrics::MetricId;
use crate::objects::MetricObject;
use crate::{Error, Result};

/// One sample column: either objects, or their precomputed distances.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Objects(Vec<MetricObject>),
    Distances(DistanceMatrix),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Objects(v) => v.len(),
            Column::Distances(d) => d.n(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distance matrix of the column. `metric` is ignored for precomputed
    /// distances.
    pub fn distances(&self, metric: &MetricId) -> Result<DistanceMatrix> {
        match self {
            Column::Objects(objs) => pairwise_matrix(objs, metric),
            Column::Distances(d) => Ok(d.clone()),
        }
    }
}

impl From<Vec<MetricObject>> for Column {
    fn from(v: Vec<MetricObject>) -> Self {
        Column::Objects(v)
    }
}

impl From<DistanceMatrix> for Column {
    fn from(d: DistanceMatrix) -> Self {
        Column::Distances(d)
    }
}

/// Aligned samples `(X_i, Y_i)`, optionally with a scalar covariate `Z_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    x: Column,
    y: Column,
    z: Option<Vec<f64>>,
}

impl PairedDataset {
    pub fn new(x: impl Into<Column>, y: impl Into<Column>) -> Result<Self> {
        let (x, y) = (x.into(), y.into());
        if x.len() != y.len() {
            return Err(Error::SizeMismatch(x.len(), y.len()));
        }
        Ok(PairedDataset { x, y, z: None })
    }

    pub fn with_covariate(mut self, z: Vec<f64>) -> Result<Self> {
        if z.len() != self.n() {
            return Err(Error::SizeMismatch(self.n(), z.len()));
        }
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("covariate value {i} is not finite")));
        }
        self.z = Some(z);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &Column {
        &self.x
    }

    pub fn y(&self) -> &Column {
        &self.y
    }

    pub fn z(&self) -> Option<&[f64]> {
        self.z.as_deref()
    }

    pub fn require_z(&self) -> Result<&[f64]> {
        self.z().ok_or(Error::MissingCovariate)
    }

    pub fn distance_matrices(&self, mx: &MetricId, my: &MetricId) -> Result<(DistanceMatrix, DistanceMatrix)> {
        Ok((self.x.distances(mx)?, self.y.distances(my)?))
    }
}

pub(crate) fn require_samples(n: usize, required: usize) -> Result<()> {
    if n < required {
        return Err(Error::TooFewSamples { required, found: n });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_must_agree() {
        let x = DistanceMatrix::from_scalars(&[0.0, 1.0, 2.0]);
        let y = DistanceMatrix::from_scalars(&[0.0, 1.0]);
        assert!(matches!(PairedDataset::new(x.clone(), y), Err(Error::SizeMismatch(3, 2))));
        let ds = PairedDataset::new(x.clone(), x).unwrap();
        assert!(ds.clone().with_covariate(vec![0.0, 1.0]).is_err());
        assert!(ds.clone().with_covariate(vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(matches!(ds.require_z(), Err(Error::MissingCovariate)));
        let ds = ds.with_covariate(vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(ds.z().unwrap().len(), 3);
    }

    #[test]
    fn precomputed_and_object_paths_agree() {
        let objs: Vec<_> = [0.0, 1.5, 4.0]
            .iter()
            .map(|&v| MetricObject::vector(vec![v]).unwrap())
            .collect();
        let from_objects = Column::from(objs).distances(&MetricId::Euclidean).unwrap();
        let precomputed = Column::from(from_objects.clone());
        assert_eq!(precomputed.distances(&MetricId::SpdAirm).unwrap(), from_objects);
    }
}
