from pathlib import Path
from typing import List, Optional, Union

from sqlmodel import Session, SQLModel, create_engine, desc, select

from .datamodels import EvalRecord, TrainRecord
from .log import logger


class RunLedger:
    """
    Run ledger service (SQLite via SQLModel)
    Records every training run and evaluation so ablations and weight-reuse
    comparisons can be queried after the fact.
    """

    def __init__(self, db_path: Union[str, Path]):
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self.engine = create_engine(f"sqlite:///{self.db_path}")
        SQLModel.metadata.create_all(self.engine, tables=[TrainRecord.__table__, EvalRecord.__table__])
        logger.debug(f"[GZap-Infra] ledger mounted at {self.db_path}")

    def get_session(self) -> Session:
        return Session(self.engine)

    def add_train(self, record: TrainRecord) -> TrainRecord:
        with self.get_session() as session:
            session.add(record)
            session.commit()
            session.refresh(record)
            return TrainRecord.model_validate(record.model_dump())

    def add_eval(self, record: EvalRecord) -> EvalRecord:
        with self.get_session() as session:
            session.add(record)
            session.commit()
            session.refresh(record)
            return EvalRecord.model_validate(record.model_dump())

    def train_runs(self, config_hash: Optional[str] = None, limit: int = 50) -> List[TrainRecord]:
        with self.get_session() as session:
            statement = select(TrainRecord)
            if config_hash is not None:
                statement = statement.where(TrainRecord.config_hash == config_hash)
            statement = statement.order_by(desc(TrainRecord.id)).limit(limit)
            return [TrainRecord.model_validate(r.model_dump()) for r in session.exec(statement).all()]

    def evals(self, fused_path: Optional[str] = None, limit: int = 50) -> List[EvalRecord]:
        with self.get_session() as session:
            statement = select(EvalRecord)
            if fused_path is not None:
                statement = statement.where(EvalRecord.fused_path == fused_path)
            statement = statement.order_by(desc(EvalRecord.id)).limit(limit)
            return [EvalRecord.model_validate(r.model_dump()) for r in session.exec(statement).all()]

    def close(self):
        self.engine.dispose()


def open_ledger(db_path: Optional[str]) -> Optional[RunLedger]:
    """Open the ledger if a path is configured; a broken ledger never blocks a run."""
    if not db_path:
        return None
    try:
        return RunLedger(db_path)
    except Exception as e:
        logger.warning(f"[GZap-Infra] run ledger unavailable at {db_path}: {e}")
        return None
