"""
Modelo de domínio do OPTSORT.

Tipos compartilhados por todos os módulos (rampas, layout, previsão de demanda,
ondas de encomendas, plano de triagem, alocação de onda e relatório de KPIs),
a hierarquia de exceções e a aritmética de capacidade das rampas.

Todos os tipos são imutáveis depois de construídos. Tempos são guardados em
segundos nos arquivos de cenário e convertidos para milissegundos inteiros
dentro do sistema (``to_ms``).
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd


# Cabeçalho do CSV de KPIs
KPI_COLUMNS = ["algo", "scenario", "cap_bar", "Rc", "Rj", "St_min", "pph", "blockages"]


class OptsortError(Exception):
    """Erro base do OPTSORT"""


class ConfigError(OptsortError):
    """
    Entrada malformada ou inconsistente
    :param field: Campo do cenário (ou parâmetro) que causou o erro
    :param message: Descrição da regra violada
    """

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class InfeasibleError(OptsortError):
    """
    Problema estruturalmente inviável
    :param message: Descrição da inviabilidade
    :param precondition: Pré-condição estrutural violada (ex.: 'Σ N_j ≥ n')
    :param hint: Sugestão de relaxamento (nunca aplicada automaticamente)
    :param iteration: Iteração do ajuste em que a inviabilidade apareceu
    """

    def __init__(self, message: str, precondition: Optional[str] = None,
                 hint: Optional[str] = None, iteration: Optional[int] = None):
        self.precondition = precondition
        self.hint = hint
        self.iteration = iteration
        partes = [message]
        if precondition:
            partes.append(f"pré-condição violada: {precondition}")
        if hint:
            partes.append(f"sugestão: {hint}")
        if iteration is not None:
            partes.append(f"iteração {iteration}")
        super().__init__("; ".join(partes))


class SolverLimitError(OptsortError):
    """Limite do solver atingido sem nenhuma solução viável"""


class ChuteKind(str, Enum):
    SPIRAL = "spiral"
    DIRECT = "direct"
    REJECTION = "rejection"


class ObjectiveKind(str, Enum):
    PARCELS = "parcels"  # Σ Y
    MATCHES = "matches"  # Σ X


class PlannedRejection(str, Enum):
    FIRST_PASS = "first_pass"
    RECIRCULATE = "recirculate"


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    LIMIT_REACHED = "limit_reached"


def to_ms(seconds: float) -> int:
    """Converte segundos para milissegundos inteiros"""
    return int(round(float(seconds) * 1000))


def effective_process_ms(base_seconds: float, efficiencies: Sequence[float]) -> Optional[int]:
    """
    Tempo efetivo por encomenda de uma rampa atendida por vários trabalhadores
    :param base_seconds: Tempo nominal t_j em segundos (um trabalhador, eficiência 1.0)
    :param efficiencies: Eficiências dos trabalhadores da rampa
    :return: Milissegundos por encomenda, ou None se ninguém atende a rampa
    """
    total = float(sum(efficiencies))
    if total <= 0:
        return None
    return max(1, int(round(to_ms(base_seconds) / total)))


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str

    def __str__(self):
        return f"{self.field}: {self.rule}"


# Marca de capacidade da rampa de rejeição: ilimitada, nunca bloqueia
UNBOUNDED = 0


@dataclass(frozen=True)
class ChuteSpec:
    """
    Rampa do sistema (espiral, direta ou de rejeição)

    A rampa de rejeição tem capacidade infinita, registrada como
    ``capacity=UNBOUNDED`` (0), e tempo de processamento 0: ela apenas conta
    encomendas. Use ``ChuteSpec.rejection`` para criá-la.
    """
    id: int
    kind: ChuteKind
    capacity: int = 1
    base_process_time: float = 30.0
    travel_time: float = 0.0
    cage_slots: int = 1
    wave_cap: Optional[int] = None
    two_handler: bool = False

    @classmethod
    def rejection(cls, id: int = 0, travel_time: float = 1.0) -> 'ChuteSpec':
        return cls(id, ChuteKind.REJECTION, capacity=UNBOUNDED, base_process_time=0.0,
                   travel_time=travel_time, cage_slots=0)

    @property
    def is_rejection(self) -> bool:
        return self.kind == ChuteKind.REJECTION

    @property
    def unbounded(self) -> bool:
        return self.is_rejection and self.capacity == UNBOUNDED

    @property
    def travel_ms(self) -> int:
        return to_ms(self.travel_time)

    @property
    def process_ms(self) -> int:
        return to_ms(self.base_process_time)


@dataclass(frozen=True)
class Layout:
    """
    Layout do centro de triagem

    ``chute_caps`` (N_j) e as colunas de ``admissibility`` (A_ij) seguem a
    ordem de ``sort_chutes``, isto é, das rampas que não são de rejeição.
    """
    chutes: Tuple[ChuteSpec, ...]
    lap_time: float
    n_destinations: int
    dest_caps: Tuple[int, ...]
    chute_caps: Tuple[int, ...]
    admissibility: Optional[Tuple[Tuple[int, ...], ...]] = None
    max_reattempts: int = 0

    @property
    def sort_chutes(self) -> Tuple[ChuteSpec, ...]:
        return tuple(c for c in self.chutes if not c.is_rejection)

    @property
    def rejection_chute(self) -> Optional[ChuteSpec]:
        for c in self.chutes:
            if c.is_rejection:
                return c
        return None

    @property
    def k(self) -> int:
        return len(self.sort_chutes)

    @property
    def lap_ms(self) -> int:
        return to_ms(self.lap_time)

    def chute_ids(self) -> Tuple[int, ...]:
        return tuple(c.id for c in self.sort_chutes)

    def column_of(self, chute_id: int) -> int:
        """Índice da coluna (0-based) da rampa nas matrizes n×k"""
        for j, c in enumerate(self.sort_chutes):
            if c.id == chute_id:
                return j
        raise ConfigError("chute", f"rampa {chute_id} não existe no layout")

    def admissibility_matrix(self) -> np.ndarray:
        """Matriz A (n×k); sem restrições devolve uma matriz de uns"""
        if self.admissibility is None:
            return np.ones((self.n_destinations, self.k), dtype=int)
        return np.asarray(self.admissibility, dtype=int).reshape(self.n_destinations, self.k)


@dataclass(frozen=True)
class DemandForecast:
    totals: Tuple[int, ...]
    shift_length: float

    @property
    def n(self) -> int:
        return len(self.totals)

    @property
    def total(self) -> int:
        return int(sum(self.totals))


@dataclass(frozen=True)
class Parcel:
    id: int
    destination: int  # índice 0-based do destino
    entry_ms: int


@dataclass(frozen=True)
class Wave:
    parcels: Tuple[Parcel, ...]
    wave_length: float

    @property
    def size(self) -> int:
        return len(self.parcels)

    @property
    def horizon_ms(self) -> int:
        return to_ms(self.wave_length)


@dataclass(frozen=True)
class WorkerProfile:
    id: int
    efficiency: float = 1.0
    chute: Optional[int] = None  # id da rampa; None = reserva ociosa


@dataclass(frozen=True)
class Scenario:
    """Cenário completo: layout, demanda, ondas, equipe e semente"""
    name: str
    layout: Layout
    forecast: DemandForecast
    waves: Tuple[Wave, ...]
    workers: int
    efficiency_range: Tuple[float, float] = (1.0, 1.0)
    seed: int = 0
    cage_capacity: int = 40
    objective_kind: ObjectiveKind = ObjectiveKind.PARCELS
    planned_rejection: PlannedRejection = PlannedRejection.FIRST_PASS
    direct_spillover: bool = True
    cap_bar: Optional[int] = None


@dataclass(frozen=True, eq=False)
class SortPlan:
    """
    Plano de turno: X (casamento destino-rampa) e Y (volumes planejados)

    As colunas seguem ``chute_ids`` (rampas de triagem do layout).
    """
    X: np.ndarray
    Y: np.ndarray
    objective_value: float
    objective_kind: ObjectiveKind
    chute_ids: Tuple[int, ...]
    status: SolveStatus = SolveStatus.OPTIMAL
    bound: Optional[float] = None
    direct: Dict[int, int] = field(default_factory=dict)  # destino -> coluna

    @property
    def planned_parcels(self) -> int:
        return int(self.Y.sum())

    def planned_load(self) -> np.ndarray:
        """Volume planejado por rampa (soma das colunas de Y)"""
        return self.Y.sum(axis=0)

    def chutes_for(self, destination: int) -> List[int]:
        """Ids das rampas casadas com o destino (índice 0-based)"""
        return [self.chute_ids[j] for j in np.flatnonzero(self.X[destination])]


@dataclass(frozen=True)
class WaveAllocation:
    """
    Alocação encomenda -> rampa de uma onda

    Encomendas fora de ``assignment`` são rejeições planejadas.
    """
    assignment: Dict[int, int]
    effective_caps: Tuple[int, ...]
    parcel_ids: Tuple[int, ...]
    status: SolveStatus = SolveStatus.OPTIMAL
    objective: int = 0
    bound: Optional[float] = None

    @property
    def planned_rejections(self) -> List[int]:
        return [p for p in self.parcel_ids if p not in self.assignment]


@dataclass(frozen=True)
class KpiReport:
    rc: int
    rj: int
    st_min: float
    throughput_pph: float
    blockages: int
    processed: int
    in_system: int = 0
    wave_size: int = 0
    laps: int = 0

    def to_row(self, algo: str, scenario: str, cap_bar) -> Dict:
        """Linha no formato do CSV de KPIs"""
        return {
            "algo": algo,
            "scenario": scenario,
            "cap_bar": "" if cap_bar is None else cap_bar,
            "Rc": self.rc,
            "Rj": self.rj,
            "St_min": round(self.st_min, 4),
            "pph": round(self.throughput_pph, 1),
            "blockages": self.blockages,
        }


def kpis_to_df(rows: Sequence[Dict]) -> pd.DataFrame:
    """DataFrame com as colunas do CSV de KPIs, na ordem padrão"""
    return pd.DataFrame(list(rows), columns=KPI_COLUMNS)


def parcel_admissibility(wave: Wave, plan: SortPlan) -> np.ndarray:
    """Q (N×k): Q_mj = 1 se o destino da encomenda m está casado com a rampa j no plano"""
    if not wave.parcels:
        return np.zeros((0, plan.X.shape[1]), dtype=int)
    destinos = np.array([p.destination for p in wave.parcels], dtype=int)
    return plan.X[destinos].astype(int)


def chute_shift_capacity(spec: ChuteSpec, T: float, process_ms: Optional[int] = None) -> int:
    """
    Número máximo de encomendas que a rampa processa em T segundos: ⌊T / t_j⌋
    :param spec: Rampa
    :param T: Horizonte em segundos
    :param process_ms: Tempo efetivo por encomenda (ms); padrão é o tempo nominal
    :return: Capacidade inteira
    """
    if spec.is_rejection:
        return 0
    t_ms = spec.process_ms if process_ms is None else process_ms
    if t_ms is None or t_ms <= 0:
        return 0
    return to_ms(T) // int(t_ms)


def system_peak_capacity(layout: Layout, T: float) -> int:
    """Soma exata das capacidades das rampas de triagem"""
    return sum(chute_shift_capacity(c, T) for c in layout.sort_chutes)


def validate_layout(layout: Layout) -> List[Violation]:
    """
    Verifica os invariantes de Layout e ChuteSpec
    :param layout: Layout a verificar
    :return: Lista de violações (vazia se tudo estiver certo)
    """
    violacoes = []

    if layout.lap_time <= 0:
        violacoes.append(Violation("lap_time", "lap_time > 0"))

    ids = [c.id for c in layout.chutes]
    if len(set(ids)) != len(ids):
        violacoes.append(Violation("chutes", "ids de rampa únicos"))

    rejeicoes = [c for c in layout.chutes if c.is_rejection]
    if len(rejeicoes) != 1:
        violacoes.append(Violation("chutes", "exatamente uma rampa de rejeição"))

    for pos, c in enumerate(layout.chutes):
        nome = f"chutes[{pos}]"
        if c.travel_time < 0:
            violacoes.append(Violation(f"{nome}.travel_time", "travel_time ≥ 0"))
        if c.travel_time >= layout.lap_time:
            violacoes.append(Violation(f"{nome}.travel_time", "travel_time < lap_time"))
        if c.is_rejection:
            if not c.unbounded:
                violacoes.append(Violation(f"{nome}.capacity", "rampa de rejeição tem capacity = 0 (ilimitada)"))
            continue
        if c.capacity < 1:
            violacoes.append(Violation(f"{nome}.capacity", "capacity ≥ 1"))
        if c.base_process_time <= 0:
            violacoes.append(Violation(f"{nome}.base_process_time", "base_process_time > 0"))
        if c.kind == ChuteKind.DIRECT and c.cage_slots != 1:
            violacoes.append(Violation(f"{nome}.cage_slots", "rampa direta tem exatamente 1 gaiola"))
        if c.kind == ChuteKind.SPIRAL and c.cage_slots < 1:
            violacoes.append(Violation(f"{nome}.cage_slots", "cage_slots ≥ 1"))
        if c.wave_cap is not None and c.wave_cap < 0:
            violacoes.append(Violation(f"{nome}.wave_cap", "wave_cap ≥ 0"))

    n = layout.n_destinations
    if n < 0:
        violacoes.append(Violation("n_destinations", "n ≥ 0"))
    if len(layout.dest_caps) != n:
        violacoes.append(Violation("dest_caps", f"um M_i por destino ({n})"))
    for i, m in enumerate(layout.dest_caps):
        if m < 1:
            violacoes.append(Violation(f"dest_caps[{i}]", "M_i ≥ 1"))

    k = layout.k
    if len(layout.chute_caps) != k:
        violacoes.append(Violation("chute_caps", f"um N_j por rampa de triagem ({k})"))
    for j, cap in enumerate(layout.chute_caps):
        if cap < 1:
            violacoes.append(Violation(f"chute_caps[{j}]", "N_j ≥ 1"))

    if layout.max_reattempts < 0:
        violacoes.append(Violation("max_reattempts", "R ≥ 0"))

    if layout.admissibility is not None:
        linhas = layout.admissibility
        if len(linhas) != n or any(len(linha) != k for linha in linhas):
            violacoes.append(Violation("admissibility", f"matriz {n}×{k}"))
        else:
            for i, linha in enumerate(linhas):
                if any(a not in (0, 1) for a in linha):
                    violacoes.append(Violation(f"admissibility[{i}]", "A_ij ∈ {0,1}"))
                elif sum(linha) == 0:
                    violacoes.append(Violation(f"admissibility[{i}]", "destino sem rampa admissível"))

    return violacoes


def validate_wave(wave: Wave, n_destinations: int) -> List[Violation]:
    """Verifica a ordem de chegada e os limites dos tempos de entrada da onda"""
    violacoes = []
    anterior = None
    horizonte = wave.horizon_ms
    for pos, p in enumerate(wave.parcels):
        if not 0 <= p.destination < n_destinations:
            violacoes.append(Violation(f"parcels[{pos}].destination", "destino existente"))
        if not 0 <= p.entry_ms <= horizonte:
            violacoes.append(Violation(f"parcels[{pos}].entry_ms", "0 ≤ τ_m ≤ T_w"))
        if anterior is not None and p.entry_ms < anterior:
            violacoes.append(Violation(f"parcels[{pos}].entry_ms", "τ_m não decrescente"))
        anterior = p.entry_ms
    ids = [p.id for p in wave.parcels]
    if len(set(ids)) != len(ids):
        violacoes.append(Violation("parcels", "ids de encomenda únicos"))
    return violacoes


if __name__ == '__main__':
    rampas = [ChuteSpec.rejection()]
    rampas += [ChuteSpec(j, ChuteKind.SPIRAL, capacity=50, base_process_time=30.0,
                         travel_time=2.0 * j, cage_slots=15) for j in range(1, 31)]
    layout = Layout(tuple(rampas), 120.0, 300, (5,) * 300, (15,) * 30)
    print(f"Violações: {validate_layout(layout)}")
    print(f"Capacidade por rampa: {chute_shift_capacity(rampas[1], 30000)}")
    print(f"Capacidade do sistema: {system_peak_capacity(layout, 30000)}")
